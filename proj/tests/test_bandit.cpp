#include <doctest.h>

#include <cmath>

#include "dsel/bandit.hpp"

using namespace dsel;

TEST_CASE("arm_probabilities examples") {
    auto uniform = make_bandit(4, 0.3, 0);
    for (double p : arm_probabilities(uniform))
        CHECK(p == doctest::Approx(0.25));

    auto two = make_bandit(2, 0.1, 0);
    two.weights = {1.0, 3.0};
    const auto p = arm_probabilities(two);
    CHECK(p[0] == doctest::Approx(0.275));
    CHECK(p[1] == doctest::Approx(0.725));

    auto explore = make_bandit(3, 1.0, 0);
    explore.weights = {5.0, 1.0, 0.25};
    for (double q : arm_probabilities(explore))
        CHECK(q == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("arm_probabilities simplex invariants") {
    auto state = make_bandit(6, 0.05, 1);
    state.weights = {0.2, 8.0, 1.0, 1e-6, 40.0, 2.5};
    const auto p = arm_probabilities(state);
    double sum = 0.0;
    for (double q : p) {
        CHECK(q >= 0.05 / 6.0);
        sum += q;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);

    state.weights = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(arm_probabilities(state), std::domain_error);
}

TEST_CASE("select_arm argmax and tie-break") {
    auto two = make_bandit(2, 0.1, 0);
    two.weights = {1.0, 3.0};
    CHECK(select_arm(two, SelectMode::kArgmax) == 1);

    auto equal = make_bandit(5, 0.1, 0);
    CHECK(select_arm(equal, SelectMode::kArgmax) == 0);
}

TEST_CASE("select_arm sample mode is seed-deterministic") {
    auto a = make_bandit(4, 0.2, 123);
    auto b = make_bandit(4, 0.2, 123);
    a.weights = b.weights = {1.0, 2.0, 0.5, 4.0};
    for (int i = 0; i < 200; ++i)
        CHECK(select_arm(a, SelectMode::kSample) == select_arm(b, SelectMode::kSample));
}

TEST_CASE("normalize_reward piecewise rule") {
    auto state = make_bandit(2, 0.1, 0);
    CHECK(normalize_reward(state, 3.5) == doctest::Approx(1.0)); // t=1 clamps
    CHECK(normalize_reward(state, 3.5) == doctest::Approx(1.0)); // running max
    CHECK(normalize_reward(state, -1.5) == doctest::Approx(-1.0)); // new min
    CHECK(normalize_reward(state, 1.0) == doctest::Approx(0.0));   // midpoint
    CHECK(normalize_reward(state, 3.5) == doctest::Approx(1.0));
    CHECK(normalize_reward(state, -1.5) == doctest::Approx(-1.0));

    auto flat = make_bandit(2, 0.1, 0);
    CHECK(normalize_reward(flat, 0.7) == doctest::Approx(0.7));
    CHECK(normalize_reward(flat, 0.7) == doctest::Approx(0.0)); // max == min
}

TEST_CASE("normalized rewards always land in [-1, 1]") {
    auto state = make_bandit(3, 0.1, 7);
    Rng rng(7);
    for (int i = 0; i < 5000; ++i) {
        const double raw = std::tan(rng.range(-1.5, 1.5)) * 100.0;
        const double norm = normalize_reward(state, raw);
        CHECK(norm >= -1.0);
        CHECK(norm <= 1.0);
    }
}

TEST_CASE("update_weight examples") {
    auto state = make_bandit(2, 0.1, 0);
    update_weight(state, 0, 0.0, 0.5);
    CHECK(state.weights[0] == doctest::Approx(1.0));
    CHECK(state.weights[1] == doctest::Approx(1.0));

    update_weight(state, 0, 1.0, 0.5);
    CHECK(state.weights[0] == doctest::Approx(std::exp(0.1)));
    CHECK(state.weights[1] == doctest::Approx(1.0)); // untouched

    // +1 then -1 multipliers cancel
    auto sym = make_bandit(2, 0.3, 0);
    update_weight(sym, 1, 1.0, 0.4);
    update_weight(sym, 1, -1.0, 0.4);
    CHECK(sym.weights[1] == doctest::Approx(1.0));

    CHECK_THROWS_AS(update_weight(state, 0, 0.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(update_weight(state, 7, 0.5, 0.5), std::invalid_argument);
}

TEST_CASE("update_weight epsilon additive share") {
    auto state = make_bandit(4, 0.2, 0, 0.1);
    state.weights = {1.0, 2.0, 3.0, 4.0}; // pre-update total 10
    update_weight(state, 2, 0.0, 0.25);   // multiplier 1
    CHECK(state.weights[0] == doctest::Approx(1.0 + 0.1 / 4.0 * 10.0));
    CHECK(state.weights[1] == doctest::Approx(2.25));
    CHECK(state.weights[2] == doctest::Approx(3.25));
    CHECK(state.weights[3] == doctest::Approx(4.25));
}

TEST_CASE("renormalization keeps probabilities and argmax stable") {
    auto state = make_bandit(3, 0.05, 0);
    state.weights = {2.0e12, 1.0e12, 0.5e12};
    const auto before = arm_probabilities(state);
    update_weight(state, 0, 0.0, before[0]); // triggers the > 1e12 renormalization
    CHECK(state.weights[0] < 1.0);
    const auto after = arm_probabilities(state);
    for (std::size_t i = 0; i < before.size(); ++i)
        CHECK(after[i] == doctest::Approx(before[i]).epsilon(1e-14));
}

TEST_CASE("power-of-two weight scaling leaves probabilities bit-identical") {
    auto a = make_bandit(5, 0.07, 0);
    auto b = make_bandit(5, 0.07, 0);
    a.weights = {0.75, 2.5, 1.25, 0.03125, 5.0};
    b.weights = a.weights;
    for (auto& w : b.weights)
        w *= 1024.0;
    const auto pa = arm_probabilities(a);
    const auto pb = arm_probabilities(b);
    for (std::size_t i = 0; i < pa.size(); ++i)
        CHECK(pa[i] == pb[i]);
}

TEST_CASE("reward sign moves the chosen arm's next probability") {
    for (double reward : {1.0, -1.0}) {
        auto state = make_bandit(3, 0.2, 0);
        state.weights = {1.0, 1.5, 0.5};
        const auto before = arm_probabilities(state);
        update_weight(state, 1, reward, before[1]);
        const auto after = arm_probabilities(state);
        if (reward > 0)
            CHECK(after[1] > before[1]);
        else
            CHECK(after[1] < before[1]);
    }
}

TEST_CASE("info_gain_reward") {
    const double same[] = {1.0, 2.0, 3.0};
    CHECK(info_gain_reward(same, same) == doctest::Approx(0.0));

    const double before[] = {1.0, 3.0};
    const double after[] = {0.5, 1.5};
    CHECK(info_gain_reward(before, after) == doctest::Approx(1.0));

    const double b2[] = {2.5, 1.5};
    const double a2[] = {2.0, 1.0};
    CHECK(info_gain_reward(b2, a2) == doctest::Approx(0.5));

    const double short_list[] = {1.0};
    CHECK_THROWS_AS(info_gain_reward(before, short_list), std::invalid_argument);
}

TEST_CASE("identical seeds reproduce identical weight trajectories") {
    auto run = [](std::uint64_t seed) {
        auto state = make_bandit(4, 0.1, seed);
        Rng rewards(seed + 1);
        std::vector<std::vector<double>> trajectory;
        for (int t = 0; t < 500; ++t) {
            const auto p = arm_probabilities(state);
            const int arm = select_arm(state, SelectMode::kSample);
            const double raw = rewards.range(-2.0, 2.0);
            const double norm = normalize_reward(state, raw);
            update_weight(state, arm, norm, p[arm]);
            trajectory.push_back(state.weights);
        }
        return trajectory;
    };
    const auto a = run(9001);
    const auto b = run(9001);
    REQUIRE(a.size() == b.size());
    for (std::size_t t = 0; t < a.size(); ++t)
        for (std::size_t i = 0; i < a[t].size(); ++i)
            CHECK(a[t][i] == b[t][i]);
}
