#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "dsel/clustering.hpp"
#include "dsel/planner.hpp"
#include "dsel/rng.hpp"

using namespace dsel;

namespace {
const std::int64_t kPaperSizes[] = {62828, 61844, 71712, 69728, 93923, 107415, 52574};
}

TEST_CASE("expected_batch_size") {
    CHECK(expected_batch_size(0.3, 1.0, 500.0, 0.2) == doctest::Approx(0.0));
    CHECK(expected_batch_size(0.1, 0.5, 100.0, 0.0) == doctest::Approx(5.0));

    const auto stats = cluster_stats(kPaperSizes);
    const double e = expected_batch_size(0.015, 0.0, stats.mean_size, stats.cv_squared);
    CHECK(e == doctest::Approx(0.015 * stats.mean_size * (1.0 + stats.cv_squared)));
    CHECK(e == doctest::Approx(1179.6).epsilon(5e-4));

    CHECK_THROWS_AS(expected_batch_size(0.0, 0.5, 100.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(expected_batch_size(0.1, 1.5, 100.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(expected_batch_size(0.1, 0.5, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(expected_batch_size(0.1, 0.5, 100.0, -0.1), std::invalid_argument);
}

TEST_CASE("optimal_b closed form") {
    CHECK(optimal_b(1000.0, 100.0, 10.0, 0.0) == doctest::Approx(0.0));
    CHECK(optimal_b(500.0, 100.0, 10.0, 0.0) == doctest::Approx(0.5));

    const auto stats = cluster_stats(kPaperSizes);
    const double n0 = 0.015 * stats.mean_size;
    CHECK(optimal_b(15000.0, n0, 14.0, stats.cv_squared) ==
          doctest::Approx(0.092).epsilon(0.011));

    try {
        optimal_b(1000.0, 100.0, 5.0, 0.0); // needs at least 10 steps
        FAIL("expected InfeasiblePlanError");
    } catch (const InfeasiblePlanError& e) {
        CHECK(e.raw_b() == doctest::Approx(-1.0));
    }
}

TEST_CASE("min_steps ceiling-plus-one convention") {
    CHECK(min_steps(1000.0, 100.0, 0.0) == 11);
    CHECK(min_steps(50.0, 100.0, 0.0) == 2);

    const auto stats = cluster_stats(kPaperSizes);
    CHECK(min_steps(15000.0, 0.015 * stats.mean_size, stats.cv_squared) == 14);
}

TEST_CASE("min_steps monotonicity") {
    Rng rng(31);
    for (int i = 0; i < 200; ++i) {
        const double b1 = rng.range(10.0, 1e5);
        const double n1 = rng.range(1.0, 5e3);
        const double cv = rng.range(0.0, 1.0);
        // non-increasing in n0
        CHECK(min_steps(b1, n1, cv) >= min_steps(b1, n1 * 1.5, cv));
        // non-decreasing in B
        CHECK(min_steps(b1 * 1.5, n1, cv) >= min_steps(b1, n1, cv));
    }
}

TEST_CASE("make_plan worked example") {
    const auto plan = make_plan(15000, 0.015, kPaperSizes, std::nullopt, 0.05);
    CHECK(plan.steps == 14);
    CHECK(plan.n0 == doctest::Approx(1114.3).epsilon(1e-4));
    CHECK(plan.b_star == doctest::Approx(0.092).epsilon(0.011));
    CHECK(plan.cv_squared == doctest::Approx(0.0586).epsilon(0.01));
}

TEST_CASE("make_plan single cluster and overrides") {
    const std::int64_t one[] = {1000};
    const auto plan = make_plan(100, 0.1, one, std::nullopt, 0.05);
    CHECK(plan.n0 == doctest::Approx(100.0));
    CHECK(plan.cv_squared == doctest::Approx(0.0));
    CHECK(plan.steps == 2);
    CHECK(plan.b_star == doctest::Approx(0.5));

    const auto wide = make_plan(100, 0.1, one, 1000, 0.05);
    CHECK(wide.steps == 1000);
    CHECK(wide.b_star == doctest::Approx(0.999));

    // too-small override is clamped up to T_min
    const auto clamped = make_plan(100, 0.1, one, 1, 0.05);
    CHECK(clamped.steps == 2);
}

TEST_CASE("b_star is increasing in T and valid for all T >= T_min") {
    Rng rng(77);
    for (int i = 0; i < 100; ++i) {
        const double budget = rng.range(100.0, 1e5);
        const double n0 = rng.range(1.0, 1e3);
        const double cv = rng.range(0.0, 0.8);
        const auto t_min = min_steps(budget, n0, cv);
        double prev = -1.0;
        for (auto t = t_min; t < t_min + 20; ++t) {
            const double b = optimal_b(budget, n0, static_cast<double>(t), cv);
            CHECK(b >= 0.0);
            CHECK(b < 1.0);
            CHECK(b > prev);
            prev = b;
        }
    }
}

TEST_CASE("budget tightness identity") {
    Rng rng(99);
    for (int i = 0; i < 500; ++i) {
        std::vector<std::int64_t> sizes;
        const int k = 2 + static_cast<int>(rng.below(8));
        for (int j = 0; j < k; ++j)
            sizes.push_back(20 + static_cast<std::int64_t>(rng.below(100000)));
        const std::int64_t budget = 10 + static_cast<std::int64_t>(rng.below(100000));
        const auto plan = make_plan(budget, rng.range(0.01, 0.5), sizes, std::nullopt, 0.05);
        const double spend = static_cast<double>(plan.steps) * plan.n0 *
                             (1.0 - plan.b_star) * (1.0 + plan.cv_squared);
        CHECK(std::abs(spend - static_cast<double>(budget)) <=
              1e-9 * static_cast<double>(budget));
    }
}

TEST_CASE("plan file round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "dsel_plan_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "plan.txt";

    const auto plan = make_plan(15000, 0.015, kPaperSizes, std::nullopt, 0.05);
    write_plan(path, plan, "unit test");
    const auto loaded = read_plan(path);
    CHECK(loaded.budget == plan.budget);
    CHECK(loaded.alpha == plan.alpha);
    CHECK(loaded.n0 == plan.n0);
    CHECK(loaded.cv_squared == plan.cv_squared);
    CHECK(loaded.steps == plan.steps);
    CHECK(loaded.b_star == plan.b_star);
    CHECK(loaded.gamma == plan.gamma);
}

TEST_CASE("plan file rejects unknown keys") {
    const auto dir = std::filesystem::temp_directory_path() / "dsel_plan_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "bad_plan.txt";
    {
        std::ofstream out(path);
        out << "budget_B = 100\nalpha = 0.1\nn0 = 10\ncv_squared = 0\nT = 11\n"
               "b_star = 0.09\ngamma = 0.05\nwhat = 3\n";
    }
    CHECK_THROWS_WITH_AS(read_plan(path), doctest::Contains("unknown key"),
                         std::runtime_error);
}
