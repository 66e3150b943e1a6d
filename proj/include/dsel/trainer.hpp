#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dsel/dataset.hpp"
#include "dsel/utility.hpp"

namespace dsel {

// What a trainer emits per step. Losses are evaluated under the parameters
// in force before the update (the forward pass of this step); the update
// itself is telemetry: its energy and its inner products against the previous
// step's direction and against the trained cluster's stored direction.
// All directions live in telemetry space: the raw parameter delta when the
// parameter count is at most kSketchThreshold, a fixed-seed random-projection
// sketch of dimension kSketchDim otherwise.
struct TrainStepReport {
    std::map<SampleId, double> per_sample_loss_before;
    double eta = 0.0;
    double update_energy = 0.0;      // ||delta theta||^2 (or sketch)
    double update_dot_prev = 0.0;    // <delta theta, previous delta theta>
    double update_dot_cluster = 0.0; // <delta theta, cluster's stored direction>
    std::vector<double> update_direction;
};

inline constexpr std::size_t kSketchThreshold = 100000;
inline constexpr std::size_t kSketchDim = 256;

// Rademacher random projection to kSketchDim, signs derived by counter-based
// hashing so no projection matrix is materialized.
std::vector<double> sketch_project(std::span<const double> v, std::uint64_t seed);

class Trainer {
public:
    virtual ~Trainer() = default;

    virtual std::size_t sample_count() const = 0;
    virtual std::size_t parameter_count() const = 0;

    // Initial full scoring pass: loss of every sample under the starting
    // parameters, in dataset row order. Called exactly once per run.
    virtual std::vector<double> score_all() = 0;

    // One gradient step on the batch. cluster_direction is the trained
    // cluster's stored telemetry direction (empty when it has none).
    virtual TrainStepReport train_on(std::span<const SampleId> batch,
                                     std::span<const double> cluster_direction) = 0;

    virtual std::optional<double> eval_validation() const = 0;
};

// Least-squares stand-in: per-sample loss 0.5 * lambda * ||theta - target||^2
// with the sample's embedding as its target. Exact loss changes are available
// in closed form, which the verification suite exploits.
class QuadraticTrainer : public Trainer {
public:
    QuadraticTrainer(const Dataset& data, double lambda, double eta,
                     std::uint64_t seed,
                     std::optional<std::vector<double>> theta0 = std::nullopt);

    std::size_t sample_count() const override { return targets_.size(); }
    std::size_t parameter_count() const override { return theta_.size(); }
    std::vector<double> score_all() override;
    TrainStepReport train_on(std::span<const SampleId> batch,
                             std::span<const double> cluster_direction) override;
    std::optional<double> eval_validation() const override;

    const std::vector<double>& theta() const { return theta_; }
    double loss_of_row(std::size_t row) const;
    double lambda() const { return lambda_; }

private:
    std::vector<std::vector<double>> targets_;
    std::vector<SampleId> ids_;
    std::map<SampleId, std::size_t> row_of_;
    std::vector<double> theta_;
    std::vector<double> prev_direction_;
    double lambda_;
    double eta_;
    std::uint64_t sketch_seed_;
};

// Multinomial logistic regression over planted feature clusters, trained by
// full-batch gradient descent on the selected samples. Softmax is guarded by
// max-subtraction; batch aggregation is order-independent (ids sorted, sums
// compensated).
class LogisticTrainer : public Trainer {
public:
    LogisticTrainer(const Dataset& data, std::span<const int> labels,
                    int num_classes, double eta, std::uint64_t seed,
                    std::vector<std::vector<double>> validation_features = {},
                    std::vector<int> validation_labels = {});

    std::size_t sample_count() const override { return features_.size(); }
    std::size_t parameter_count() const override {
        return weights_.size();
    }
    std::vector<double> score_all() override;
    TrainStepReport train_on(std::span<const SampleId> batch,
                             std::span<const double> cluster_direction) override;
    std::optional<double> eval_validation() const override;

    double loss_of_row(std::size_t row) const;

private:
    double loss_for(std::span<const double> features, int label) const;

    std::vector<std::vector<double>> features_;
    std::vector<int> labels_;
    std::vector<SampleId> ids_;
    std::map<SampleId, std::size_t> row_of_;
    int num_classes_;
    std::size_t dim_;
    std::vector<double> weights_; // row-major [num_classes x dim]
    std::vector<double> prev_direction_;
    double eta_;
    std::uint64_t sketch_seed_;
    std::vector<std::vector<double>> val_features_;
    std::vector<int> val_labels_;
};

// Folds a step report into the gradient bookkeeping. The returned stats carry
// the prediction inputs for this step: the trained cluster's pre-refresh
// energy (self-referencing the report when the cluster has no history), the
// report's energy as prev_energy, and their alignment; the cluster entry is
// then refreshed with the report's direction.
GradientStats extract_gradient_stats(const TrainStepReport& report,
                                     const GradientStats& prev, int cluster_index,
                                     std::int64_t iteration);

} // namespace dsel
