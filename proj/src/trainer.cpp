#include "dsel/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dsel/rng.hpp"

namespace dsel {

namespace {

// Neumaier-compensated accumulator: sums are independent of rounding drift
// for any fixed addend order.
struct Accum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double term) {
        const double t = sum + term;
        if (std::abs(sum) >= std::abs(term))
            comp += (sum - t) + term;
        else
            comp += (term - t) + sum;
        sum = t;
    }

    double value() const { return sum + comp; }
};

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("telemetry dot: dimension mismatch");
    Accum acc;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc.add(a[i] * b[i]);
    return acc.value();
}

struct Telemetry {
    std::vector<double> direction;
    double energy = 0.0;
    double dot_prev = 0.0;
    double dot_cluster = 0.0;
};

Telemetry make_telemetry(std::vector<double> raw_update,
                         std::span<const double> prev_direction,
                         std::span<const double> cluster_direction,
                         std::uint64_t sketch_seed) {
    Telemetry t;
    if (raw_update.size() > kSketchThreshold)
        t.direction = sketch_project(raw_update, sketch_seed);
    else
        t.direction = std::move(raw_update);
    t.energy = dot(t.direction, t.direction);
    t.dot_prev = prev_direction.empty() ? 0.0 : dot(t.direction, prev_direction);
    t.dot_cluster = cluster_direction.empty() ? 0.0 : dot(t.direction, cluster_direction);
    return t;
}

std::vector<SampleId> sorted_batch(std::span<const SampleId> batch) {
    if (batch.empty())
        throw std::invalid_argument("train_on: empty batch");
    std::vector<SampleId> ids(batch.begin(), batch.end());
    std::sort(ids.begin(), ids.end());
    return ids;
}

} // namespace

std::vector<double> sketch_project(std::span<const double> v, std::uint64_t seed) {
    std::vector<double> out(kSketchDim, 0.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(kSketchDim));
    for (std::size_t k = 0; k < kSketchDim; ++k) {
        Accum acc;
        for (std::size_t j = 0; j < v.size(); ++j) {
            std::uint64_t h = seed + 0xa24baed4963ee407ULL * (k + 1) +
                              0x9fb21c651e98df25ULL * (j + 1);
            const std::uint64_t bit = splitmix64(h) & 1ULL;
            acc.add(bit ? v[j] : -v[j]);
        }
        out[k] = acc.value() * scale;
    }
    return out;
}

// ---------------------------------------------------------------------------
// QuadraticTrainer

QuadraticTrainer::QuadraticTrainer(const Dataset& data, double lambda, double eta,
                                   std::uint64_t seed,
                                   std::optional<std::vector<double>> theta0)
    : lambda_(lambda), eta_(eta), sketch_seed_(mix_seed(seed, 0x5ce7c1)) {
    if (!(lambda > 0.0))
        throw std::invalid_argument("QuadraticTrainer: lambda must be positive");
    if (!(eta >= 0.0))
        throw std::invalid_argument("QuadraticTrainer: eta must be nonnegative");
    if (data.samples.empty())
        throw std::invalid_argument("QuadraticTrainer: empty dataset");
    targets_.reserve(data.samples.size());
    ids_.reserve(data.samples.size());
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        targets_.push_back(data.samples[i].embedding);
        ids_.push_back(data.samples[i].id);
        row_of_[data.samples[i].id] = i;
    }
    if (theta0) {
        if (theta0->size() != data.embedding_dim)
            throw std::invalid_argument("QuadraticTrainer: theta0 dimension mismatch");
        theta_ = std::move(*theta0);
    } else {
        Rng rng(mix_seed(seed, 0x7e7a0));
        theta_.resize(data.embedding_dim);
        for (auto& x : theta_)
            x = rng.gaussian();
    }
}

double QuadraticTrainer::loss_of_row(std::size_t row) const {
    double d2 = 0.0;
    const auto& target = targets_[row];
    for (std::size_t j = 0; j < theta_.size(); ++j) {
        const double d = theta_[j] - target[j];
        d2 += d * d;
    }
    return 0.5 * lambda_ * d2;
}

std::vector<double> QuadraticTrainer::score_all() {
    std::vector<double> out(targets_.size());
    for (std::size_t i = 0; i < targets_.size(); ++i)
        out[i] = loss_of_row(i);
    return out;
}

TrainStepReport QuadraticTrainer::train_on(std::span<const SampleId> batch,
                                           std::span<const double> cluster_direction) {
    const auto ids = sorted_batch(batch);
    TrainStepReport report;
    report.eta = eta_;

    std::vector<Accum> mean_target(theta_.size());
    for (auto id : ids) {
        const auto it = row_of_.find(id);
        if (it == row_of_.end())
            throw std::invalid_argument("train_on: unknown sample id " + std::to_string(id));
        report.per_sample_loss_before[id] = loss_of_row(it->second);
        const auto& target = targets_[it->second];
        for (std::size_t j = 0; j < theta_.size(); ++j)
            mean_target[j].add(target[j]);
    }

    const double inv_n = 1.0 / static_cast<double>(ids.size());
    std::vector<double> raw_update(theta_.size());
    for (std::size_t j = 0; j < theta_.size(); ++j) {
        const double grad_j = lambda_ * (theta_[j] - mean_target[j].value() * inv_n);
        raw_update[j] = -eta_ * grad_j;
    }
    for (std::size_t j = 0; j < theta_.size(); ++j)
        theta_[j] += raw_update[j];

    auto tel = make_telemetry(std::move(raw_update), prev_direction_, cluster_direction,
                              sketch_seed_);
    report.update_energy = tel.energy;
    report.update_dot_prev = tel.dot_prev;
    report.update_dot_cluster = tel.dot_cluster;
    report.update_direction = tel.direction;
    prev_direction_ = std::move(tel.direction);
    return report;
}

std::optional<double> QuadraticTrainer::eval_validation() const {
    Accum acc;
    for (std::size_t i = 0; i < targets_.size(); ++i)
        acc.add(loss_of_row(i));
    return acc.value() / static_cast<double>(targets_.size());
}

// ---------------------------------------------------------------------------
// LogisticTrainer

LogisticTrainer::LogisticTrainer(const Dataset& data, std::span<const int> labels,
                                 int num_classes, double eta, std::uint64_t seed,
                                 std::vector<std::vector<double>> validation_features,
                                 std::vector<int> validation_labels)
    : num_classes_(num_classes), dim_(data.embedding_dim), eta_(eta),
      sketch_seed_(mix_seed(seed, 0x10916)),
      val_features_(std::move(validation_features)),
      val_labels_(std::move(validation_labels)) {
    if (num_classes < 2)
        throw std::invalid_argument("LogisticTrainer: need at least two classes");
    if (!(eta >= 0.0))
        throw std::invalid_argument("LogisticTrainer: eta must be nonnegative");
    if (labels.size() != data.samples.size())
        throw std::invalid_argument("LogisticTrainer: labels/sample count mismatch");
    if (val_features_.size() != val_labels_.size())
        throw std::invalid_argument("LogisticTrainer: validation size mismatch");
    features_.reserve(data.samples.size());
    ids_.reserve(data.samples.size());
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        features_.push_back(data.samples[i].embedding);
        ids_.push_back(data.samples[i].id);
        row_of_[data.samples[i].id] = i;
        if (labels[i] < 0 || labels[i] >= num_classes)
            throw std::invalid_argument("LogisticTrainer: label out of range for id " +
                                        std::to_string(data.samples[i].id));
        labels_.push_back(labels[i]);
    }
    weights_.assign(static_cast<std::size_t>(num_classes) * dim_, 0.0);
}

double LogisticTrainer::loss_for(std::span<const double> features, int label) const {
    // max-subtracted log-sum-exp; never overflows
    double zmax = -std::numeric_limits<double>::infinity();
    std::vector<double> z(num_classes_);
    for (int c = 0; c < num_classes_; ++c) {
        double s = 0.0;
        const double* w = &weights_[static_cast<std::size_t>(c) * dim_];
        for (std::size_t j = 0; j < dim_; ++j)
            s += w[j] * features[j];
        z[c] = s;
        zmax = std::max(zmax, s);
    }
    double lse = 0.0;
    for (int c = 0; c < num_classes_; ++c)
        lse += std::exp(z[c] - zmax);
    return zmax + std::log(lse) - z[label];
}

double LogisticTrainer::loss_of_row(std::size_t row) const {
    return loss_for(features_[row], labels_[row]);
}

std::vector<double> LogisticTrainer::score_all() {
    std::vector<double> out(features_.size());
    for (std::size_t i = 0; i < features_.size(); ++i)
        out[i] = loss_of_row(i);
    return out;
}

TrainStepReport LogisticTrainer::train_on(std::span<const SampleId> batch,
                                          std::span<const double> cluster_direction) {
    const auto ids = sorted_batch(batch);
    TrainStepReport report;
    report.eta = eta_;

    std::vector<Accum> grad(weights_.size());
    std::vector<double> z(num_classes_);
    for (auto id : ids) {
        const auto it = row_of_.find(id);
        if (it == row_of_.end())
            throw std::invalid_argument("train_on: unknown sample id " + std::to_string(id));
        const std::size_t row = it->second;
        const auto& x = features_[row];

        double zmax = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < num_classes_; ++c) {
            double s = 0.0;
            const double* w = &weights_[static_cast<std::size_t>(c) * dim_];
            for (std::size_t j = 0; j < dim_; ++j)
                s += w[j] * x[j];
            z[c] = s;
            zmax = std::max(zmax, s);
        }
        double lse = 0.0;
        for (int c = 0; c < num_classes_; ++c) {
            z[c] = std::exp(z[c] - zmax);
            lse += z[c];
        }
        report.per_sample_loss_before[id] = std::log(lse) - std::log(z[labels_[row]]);
        for (int c = 0; c < num_classes_; ++c) {
            const double residual = z[c] / lse - (labels_[row] == c ? 1.0 : 0.0);
            for (std::size_t j = 0; j < dim_; ++j)
                grad[static_cast<std::size_t>(c) * dim_ + j].add(residual * x[j]);
        }
    }

    const double inv_n = 1.0 / static_cast<double>(ids.size());
    std::vector<double> raw_update(weights_.size());
    for (std::size_t k = 0; k < weights_.size(); ++k)
        raw_update[k] = -eta_ * grad[k].value() * inv_n;
    for (std::size_t k = 0; k < weights_.size(); ++k)
        weights_[k] += raw_update[k];

    auto tel = make_telemetry(std::move(raw_update), prev_direction_, cluster_direction,
                              sketch_seed_);
    report.update_energy = tel.energy;
    report.update_dot_prev = tel.dot_prev;
    report.update_dot_cluster = tel.dot_cluster;
    report.update_direction = tel.direction;
    prev_direction_ = std::move(tel.direction);
    return report;
}

std::optional<double> LogisticTrainer::eval_validation() const {
    if (val_features_.empty())
        return std::nullopt;
    Accum acc;
    for (std::size_t i = 0; i < val_features_.size(); ++i)
        acc.add(loss_for(val_features_[i], val_labels_[i]));
    return acc.value() / static_cast<double>(val_features_.size());
}

// ---------------------------------------------------------------------------

GradientStats extract_gradient_stats(const TrainStepReport& report,
                                     const GradientStats& prev, int cluster_index,
                                     std::int64_t iteration) {
    if (cluster_index < 0)
        throw std::invalid_argument("extract_gradient_stats: bad cluster index");
    if (!(report.update_energy >= 0.0))
        throw std::invalid_argument("extract_gradient_stats: negative update energy");

    GradientStats next = prev;
    if (next.clusters.size() <= static_cast<std::size_t>(cluster_index))
        next.clusters.resize(cluster_index + 1);
    auto& entry = next.clusters[cluster_index];

    const bool has_history = entry.last_selected_iter >= 0;
    if (!has_history) {
        next.cluster_energy = report.update_energy; // self-reference
        next.cos_phi = 1.0;
    } else {
        next.cluster_energy = entry.energy;
        if (report.update_energy <= 0.0 || entry.energy <= 0.0) {
            next.cos_phi = 0.0;
        } else {
            const double denom = std::sqrt(report.update_energy * entry.energy);
            next.cos_phi = std::clamp(report.update_dot_cluster / denom, -1.0, 1.0);
        }
    }
    next.prev_energy = report.update_energy;
    next.eta = report.eta;

    entry.last_selected_iter = iteration;
    entry.energy = report.update_energy;
    entry.direction = report.update_direction;
    return next;
}

} // namespace dsel
