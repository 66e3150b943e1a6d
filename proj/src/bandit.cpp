#include "dsel/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dsel {

namespace {
constexpr double kRenormalizeAbove = 1e12;
}

BanditState make_bandit(int num_arms, double gamma, std::uint64_t seed, double epsilon) {
    if (num_arms < 1)
        throw std::invalid_argument("make_bandit: need at least one arm");
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("make_bandit: gamma must be in (0,1]");
    if (!(epsilon >= 0.0))
        throw std::invalid_argument("make_bandit: epsilon must be nonnegative");
    BanditState st;
    st.weights.assign(num_arms, 1.0);
    st.gamma = gamma;
    st.epsilon = epsilon;
    st.rng_seed = seed;
    st.rng = Rng(seed);
    return st;
}

std::vector<double> arm_probabilities(const BanditState& state) {
    const std::size_t k = state.weights.size();
    double total = 0.0;
    for (double w : state.weights) {
        if (!(w > 0.0) || !std::isfinite(w))
            throw std::domain_error("arm_probabilities: weights must be positive and finite");
        total += w;
    }
    if (!(total > 0.0))
        throw std::domain_error("arm_probabilities: zero total weight");
    std::vector<double> p(k);
    for (std::size_t i = 0; i < k; ++i)
        p[i] = (1.0 - state.gamma) * (state.weights[i] / total) +
               state.gamma / static_cast<double>(k);
    return p;
}

int select_arm(BanditState& state, SelectMode mode) {
    const auto p = arm_probabilities(state);
    if (mode == SelectMode::kArgmax) {
        int best = 0;
        for (std::size_t i = 1; i < p.size(); ++i)
            if (p[i] > p[best])
                best = static_cast<int>(i);
        return best;
    }
    return static_cast<int>(state.rng.categorical(p));
}

double normalize_reward(BanditState& state, double raw) {
    ++state.iteration;
    if (state.iteration == 1) {
        state.reward_min = raw;
        state.reward_max = raw;
        return std::clamp(raw, -1.0, 1.0);
    }
    state.reward_min = std::min(state.reward_min, raw);
    state.reward_max = std::max(state.reward_max, raw);
    if (state.reward_max == state.reward_min)
        return 0.0;
    return 2.0 * (raw - state.reward_min) / (state.reward_max - state.reward_min) - 1.0;
}

void update_weight(BanditState& state, int chosen_arm, double normalized_reward,
                   double prob_of_chosen) {
    const auto k = static_cast<double>(state.weights.size());
    if (chosen_arm < 0 || static_cast<std::size_t>(chosen_arm) >= state.weights.size())
        throw std::invalid_argument("update_weight: arm index out of range");
    if (!(prob_of_chosen > 0.0))
        throw std::invalid_argument("update_weight: probability must be positive");

    double total_pre = 0.0;
    for (double w : state.weights)
        total_pre += w;

    state.weights[chosen_arm] *=
        std::exp(state.gamma / k * normalized_reward / prob_of_chosen);
    if (state.epsilon > 0.0) {
        const double share = state.epsilon / k * total_pre;
        for (double& w : state.weights)
            w += share;
    }

    double max_w = 0.0;
    for (double w : state.weights) {
        if (!std::isfinite(w))
            throw std::overflow_error("update_weight: weight overflow");
        max_w = std::max(max_w, w);
    }
    if (max_w > kRenormalizeAbove) {
        double total = 0.0;
        for (double w : state.weights)
            total += w;
        for (double& w : state.weights)
            w /= total;
        for (double w : state.weights)
            if (!(w > 0.0) || !std::isfinite(w))
                throw std::overflow_error("update_weight: weights degenerate after renormalization");
    }
}

double info_gain_reward(std::span<const double> utility_before,
                        std::span<const double> utility_after) {
    if (utility_before.size() != utility_after.size())
        throw std::invalid_argument("info_gain_reward: length mismatch");
    if (utility_before.empty())
        throw std::invalid_argument("info_gain_reward: empty batch");
    double sum = 0.0;
    double comp = 0.0; // Neumaier compensation
    for (std::size_t i = 0; i < utility_before.size(); ++i) {
        const double term = utility_before[i] - utility_after[i];
        const double t = sum + term;
        if (std::abs(sum) >= std::abs(term))
            comp += (sum - t) + term;
        else
            comp += (term - t) + sum;
        sum = t;
    }
    return (sum + comp) / static_cast<double>(utility_before.size());
}

} // namespace dsel
