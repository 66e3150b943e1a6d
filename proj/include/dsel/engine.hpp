#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <optional>
#include <vector>

#include "dsel/bandit.hpp"
#include "dsel/clustering.hpp"
#include "dsel/dataset.hpp"
#include "dsel/event_log.hpp"
#include "dsel/planner.hpp"
#include "dsel/trainer.hpp"
#include "dsel/utility.hpp"

namespace dsel {

enum class Scheduler { kBandit, kRandom };

struct EngineConfig {
    BudgetPlan plan;
    Scheduler scheduler = Scheduler::kBandit;
    SelectMode arm_mode = SelectMode::kArgmax;
    std::uint64_t selection_seed = 0;
    double bandit_epsilon = 0.0;
    int snapshot_cadence = 0; // 0: never
    bool record_wall_time = false;
};

struct RunSummary {
    std::int64_t iterations = 0;
    std::int64_t total_selected = 0;
    std::vector<std::int64_t> pull_counts;
    double cumulative_utility_drop = 0.0;
    std::optional<double> final_validation_loss;
};

// Top-utility pick honoring the task-cluster split: quota/M per task cluster,
// remainder one-by-one to task clusters in descending size order; within a
// task cluster, highest utility first, ties to the lowest id. Task clusters
// smaller than their share contribute what they have.
std::vector<SampleId> select_samples(const DifficultyCluster& cluster,
                                     std::int64_t quota,
                                     const std::function<double(SampleId)>& utility_of);

// Drives the four-step iteration loop: pick a difficulty cluster, pick its
// top-utility samples under the budget, train, then fold the step report into
// utilities, reward, and scheduler weights.
class Engine {
public:
    Engine(Dataset& data, std::vector<DifficultyCluster> clusters,
           Trainer& trainer, const EngineConfig& config,
           EventLogWriter* log = nullptr);

    // One iteration; false once the budget is spent or t reached plan.steps.
    bool step();
    RunSummary run();

    std::int64_t iteration() const { return t_; }
    std::int64_t budget_left() const { return budget_left_; }
    const BanditState& bandit() const { return bandit_; }
    const GradientStats& gradient_stats() const { return stats_; }
    const std::vector<IterationEvent>& events() const { return events_; }
    const std::vector<DifficultyCluster>& clusters() const { return clusters_; }

private:
    void write_snapshot();

    Dataset& data_;
    std::vector<DifficultyCluster> clusters_;
    Trainer& trainer_;
    EngineConfig config_;
    EventLogWriter* log_;

    std::unordered_map<SampleId, std::size_t> row_of_id_;

    BanditState bandit_;
    GradientStats stats_;
    Rng selection_rng_;
    std::int64_t t_ = 0;
    std::int64_t budget_left_ = 0;
    std::int64_t total_selected_ = 0;
    double cumulative_drop_ = 0.0;
    std::vector<std::int64_t> pull_counts_;
    std::vector<IterationEvent> events_;
};

} // namespace dsel
