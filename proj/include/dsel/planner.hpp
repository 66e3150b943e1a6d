#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

namespace dsel {

// Closed-form schedule parameters: how many iterations to run and how much
// smoothing to apply so the expected total sample spend meets the budget
// exactly.
struct BudgetPlan {
    std::int64_t budget = 0;  // B, total samples
    double alpha = 0.0;       // per-cluster sampling rate, (0, 1]
    double n0 = 0.0;          // alpha * mean cluster size
    double cv_squared = 0.0;  // cluster-size heterogeneity
    std::int64_t steps = 0;   // T, planned iterations (>= min_steps)
    double b_star = 0.0;      // smoothing coefficient, [0, 1)
    double gamma = 0.05;      // exploration rate handed to the scheduler
};

// Thrown when a requested step count admits no smoothing coefficient in
// [0, 1); carries the raw (negative) closed-form value.
class InfeasiblePlanError : public std::domain_error {
public:
    InfeasiblePlanError(const std::string& what, double raw_b)
        : std::domain_error(what), raw_b_(raw_b) {}
    double raw_b() const { return raw_b_; }

private:
    double raw_b_;
};

// Expected samples drawn per round: alpha * (1-b) * mean * (1 + cv^2).
double expected_batch_size(double alpha, double b, double mean_cluster_size,
                           double cv_squared);

// b* = 1 - B / (n0 * T * (1 + cv^2)). Throws InfeasiblePlanError when the raw
// value is negative (T too small for the budget).
double optimal_b(double budget, double n0, double steps, double cv_squared);

// Smallest T with a valid smoothing coefficient: ceil(B / (n0 (1+cv^2))) + 1.
std::int64_t min_steps(double budget, double n0, double cv_squared);

// Derives mean/cv^2 from the cluster sizes, picks T = max(override, min_steps)
// when an override is given (min_steps otherwise), and solves for b*.
BudgetPlan make_plan(std::int64_t budget, double alpha,
                     std::span<const std::int64_t> cluster_sizes,
                     std::optional<std::int64_t> steps_override, double gamma);

// Flat key = value document with '#' provenance comments. Unknown or missing
// keys are errors on read.
void write_plan(const std::filesystem::path& path, const BudgetPlan& plan,
                const std::string& provenance);
BudgetPlan read_plan(const std::filesystem::path& path);

} // namespace dsel
