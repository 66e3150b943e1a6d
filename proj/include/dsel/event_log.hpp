#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace dsel {

// One line per iteration, JSON objects with a fixed key order (documented in
// the README). Numeric fields use shortest round-trip decimal encoding, so a
// run with wall-time recording disabled is byte-reproducible.
struct RunMeta {
    int schema_version = 1;
    std::string scheduler;   // "bandit" | "random"
    std::string arm_mode;    // "argmax" | "sample"
    std::uint64_t selection_seed = 0;
    std::uint64_t trainer_seed = 0;
    std::int64_t budget = 0;
    std::int64_t steps = 0;
    double alpha = 0.0;
    double b = 0.0;
    double gamma = 0.0;
    double epsilon = 0.0;
    int num_arms = 0;
    std::vector<std::int64_t> cluster_sizes;
    std::string trainer;
    int snapshot_cadence = 0;
    bool record_wall_time = false;
};

struct IterationEvent {
    std::int64_t t = 0;
    int arm = 0;
    std::int64_t batch = 0;
    std::int64_t budget_left = 0;
    double beta_star = 0.0;
    double predicted_delta = 0.0;
    double utility_before = 0.0; // batch mean prior to the update
    double utility_after = 0.0;  // batch mean after the update
    double raw_reward = 0.0;
    double norm_reward = 0.0;
    std::vector<double> weights;       // post-update
    std::vector<double> probabilities; // used for this selection
    double g_cluster = 0.0;
    double g_prev = 0.0;
    double cos_phi = 0.0;
    double eta = 0.0;
    std::int64_t wall_time_ms = 0;
};

struct UtilitySnapshot {
    std::int64_t t = 0;
    std::vector<std::int64_t> ids;
    std::vector<double> utilities;
};

struct RunSummaryRecord {
    std::int64_t iterations = 0;
    std::int64_t total_selected = 0;
    std::vector<std::int64_t> pull_counts;
    double cumulative_utility_drop = 0.0;
    std::optional<double> final_validation_loss;
};

class EventLogWriter {
public:
    explicit EventLogWriter(const std::filesystem::path& path);

    void write_meta(const RunMeta& meta);
    void write_event(const IterationEvent& ev);
    void write_snapshot(const UtilitySnapshot& snap);
    void write_summary(const RunSummaryRecord& summary);
    void flush();

private:
    std::ofstream out_;
};

struct EventLog {
    RunMeta meta;
    std::vector<IterationEvent> events;
    std::vector<UtilitySnapshot> snapshots;
    std::optional<RunSummaryRecord> summary;
};

// Parses a log file; malformed input raises std::runtime_error naming the
// first bad line.
EventLog read_event_log(const std::filesystem::path& path);

// Recomputes every arm choice (and the reward normalization chain) from the
// meta record and the logged weight trajectory. Returns an error message, or
// nullopt when the log replays exactly.
std::optional<std::string> verify_replay(const EventLog& log);

} // namespace dsel
