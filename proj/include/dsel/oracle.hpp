#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dsel/event_log.hpp"

namespace dsel {

// Brute-force verification, independent of the code paths it checks: grid
// search against closed forms, exact recomputation against approximations,
// and simulation against steady-state claims.
struct OracleReport {
    std::string check;
    double max_abs_dev = 0.0;
    double max_rel_dev = 0.0;
    bool pass = false;
    int trials = 0;
    std::uint64_t seed = 0;
    std::string details;

    std::string to_line() const;
};

// Closed-form mixing weight vs grid search (step 1e-4) over the explicit
// two-vector objective ||beta u + (1-beta) v||^2. Tolerance 2e-3.
OracleReport check_beta_grid(int trials, std::uint64_t seed);

// Quadratic trainer: |exact dL - (-eta ||grad||^2)| / (eta ||grad||^2) must
// equal eta*lambda/2, and halving eta must halve it (ratio in [1.9, 2.1]).
OracleReport check_taylor(std::span<const double> etas, std::uint64_t seed);

// Recursive smoothed-utility updates vs the direct geometric expansion over a
// random loss/change stream; tolerance 1e-10 absolute.
OracleReport check_idu_expansion(int steps, double b, std::uint64_t seed);

// T * n0 * (1-b*) * (1+cv^2) = B within 1e-9 * B for random feasible plans
// (plus the seven-cluster worked example).
OracleReport check_budget_tightness(int trials, std::uint64_t seed);

// Per-iteration identity between the logged predicted delta and its
// recomputation from the logged gradient stats, scaled by |S_t| (1-b).
// Asserted for t > threshold; for t <= threshold the historical-term variants
// (exponent t-1 vs t-2) are evaluated against the actual logged utility drop
// and reported without assertion.
OracleReport check_decomposition(const EventLog& log, int t_threshold = 5);

// Stochastic scheduler fed rewards proportional to (1-b)|C_i|: empirical pull
// frequencies must match |C_i| / sum within 0.05 per arm, with the largest
// cluster pulled most. Runs the additive-share variant (epsilon) — plain EXP3
// concentrates on the argmax arm instead of stabilizing near proportionality.
OracleReport check_exp3_steady_state(std::span<const std::int64_t> cluster_sizes,
                                     double gamma, int rounds, std::uint64_t seed,
                                     double b = 0.1, double epsilon = 0.03);

std::vector<OracleReport> run_all_checks(std::uint64_t seed);

} // namespace dsel
