#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dsel/rng.hpp"

namespace dsel {

// EXP3 state over the difficulty clusters. epsilon > 0 enables the
// additive-share variant (every arm receives epsilon/K of the total weight
// each update), which keeps all arms alive under persistent reward gaps.
struct BanditState {
    std::vector<double> weights;
    double gamma = 0.05;
    double epsilon = 0.0;
    double reward_min = 0.0;
    double reward_max = 0.0;
    std::int64_t iteration = 0; // reward observations so far
    std::uint64_t rng_seed = 0;
    Rng rng{0};
};

BanditState make_bandit(int num_arms, double gamma, std::uint64_t seed,
                        double epsilon = 0.0);

// DC_t(i) = (1-gamma) w_i / sum(w) + gamma / K. Sums to 1; every entry is at
// least gamma/K; ordering follows the weights.
std::vector<double> arm_probabilities(const BanditState& state);

enum class SelectMode { kArgmax, kSample };

// Argmax: highest probability, ties to the lowest index. Sample: seeded
// categorical draw (consumes one value from the state's rng).
int select_arm(BanditState& state, SelectMode mode);

// Min-max normalization over the running extrema, updated with `raw` first.
// First observation: raw clamped to [-1, 1]. Degenerate extrema map to 0.
double normalize_reward(BanditState& state, double raw);

// w_chosen *= exp(gamma/K * reward / prob); with epsilon > 0 all arms then
// gain epsilon/K of the pre-update weight total. Weights renormalize by their
// sum whenever one exceeds 1e12 (probabilities are scale-invariant).
void update_weight(BanditState& state, int chosen_arm, double normalized_reward,
                   double prob_of_chosen);

// Mean element-wise drop of the smoothed utility over the trained batch.
double info_gain_reward(std::span<const double> utility_before,
                        std::span<const double> utility_after);

} // namespace dsel
