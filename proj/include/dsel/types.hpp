#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace dsel {

using SampleId = std::int64_t;

// One data point: identity, difficulty score, task embedding, and the live
// training-time signals the selection loop maintains for it.
struct SampleRecord {
    SampleId id = 0;
    double ifd = 0.0;        // instruction-following difficulty (perplexity ratio, >= 0)
    std::vector<double> embedding;
    double current_loss = 0.0; // last observed forward-pass loss (nats)
    double utility = 0.0;      // smoothed selection utility (nats)
    std::optional<std::int64_t> last_selected_iter;
    int difficulty_bin = -1;
    int task_cluster = -1;
};

} // namespace dsel
