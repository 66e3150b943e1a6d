#include "dsel/planner.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "dsel/clustering.hpp"
#include "dsel/numfmt.hpp"

namespace dsel {

double expected_batch_size(double alpha, double b, double mean_cluster_size,
                           double cv_squared) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("expected_batch_size: alpha must be in (0,1]");
    if (!(b >= 0.0 && b <= 1.0))
        throw std::invalid_argument("expected_batch_size: b must be in [0,1]");
    if (!(mean_cluster_size > 0.0))
        throw std::invalid_argument("expected_batch_size: mean cluster size must be positive");
    if (!(cv_squared >= 0.0))
        throw std::invalid_argument("expected_batch_size: cv_squared must be nonnegative");
    return alpha * (1.0 - b) * mean_cluster_size * (1.0 + cv_squared);
}

double optimal_b(double budget, double n0, double steps, double cv_squared) {
    if (!(budget > 0.0) || !(n0 > 0.0) || !(steps > 0.0))
        throw std::invalid_argument("optimal_b: budget, n0 and steps must be positive");
    if (!(cv_squared >= 0.0))
        throw std::invalid_argument("optimal_b: cv_squared must be nonnegative");
    const double raw = 1.0 - budget / (n0 * steps * (1.0 + cv_squared));
    if (raw < 0.0)
        throw InfeasiblePlanError(
            "optimal_b: " + format_double(steps) + " steps cannot absorb budget " +
                format_double(budget) + " (raw b = " + format_double(raw) + ")",
            raw);
    return raw;
}

std::int64_t min_steps(double budget, double n0, double cv_squared) {
    if (!(budget > 0.0) || !(n0 > 0.0))
        throw std::invalid_argument("min_steps: budget and n0 must be positive");
    if (!(cv_squared >= 0.0))
        throw std::invalid_argument("min_steps: cv_squared must be nonnegative");
    return static_cast<std::int64_t>(std::ceil(budget / (n0 * (1.0 + cv_squared)))) + 1;
}

BudgetPlan make_plan(std::int64_t budget, double alpha,
                     std::span<const std::int64_t> cluster_sizes,
                     std::optional<std::int64_t> steps_override, double gamma) {
    if (budget <= 0)
        throw std::invalid_argument("make_plan: budget must be positive");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("make_plan: gamma must be in (0,1)");
    const ClusterStats stats = cluster_stats(cluster_sizes);

    BudgetPlan plan;
    plan.budget = budget;
    plan.alpha = alpha;
    plan.cv_squared = stats.cv_squared;
    plan.n0 = alpha * stats.mean_size;
    if (!(plan.n0 > 0.0) || !(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("make_plan: alpha must be in (0,1]");
    plan.gamma = gamma;

    const std::int64_t t_min =
        min_steps(static_cast<double>(budget), plan.n0, plan.cv_squared);
    plan.steps = steps_override ? std::max(*steps_override, t_min) : t_min;
    plan.b_star = optimal_b(static_cast<double>(budget), plan.n0,
                            static_cast<double>(plan.steps), plan.cv_squared);
    return plan;
}

void write_plan(const std::filesystem::path& path, const BudgetPlan& plan,
                const std::string& provenance) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "# budget plan\n";
    if (!provenance.empty()) {
        std::istringstream lines(provenance);
        std::string l;
        while (std::getline(lines, l))
            out << "# " << l << '\n';
    }
    out << "budget_B = " << plan.budget << '\n';
    out << "alpha = " << format_double(plan.alpha) << '\n';
    out << "n0 = " << format_double(plan.n0) << '\n';
    out << "cv_squared = " << format_double(plan.cv_squared) << '\n';
    out << "T = " << plan.steps << '\n';
    out << "b_star = " << format_double(plan.b_star) << '\n';
    out << "gamma = " << format_double(plan.gamma) << '\n';
    if (!out)
        throw std::runtime_error("write failed: " + path.string());
}

BudgetPlan read_plan(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#')
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": expected 'key = value'");
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!kv.emplace(key, value).second)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": duplicate key '" + key + "'");
    }

    const std::vector<std::string> expected = {"budget_B", "alpha",  "n0",   "cv_squared",
                                               "T",        "b_star", "gamma"};
    for (const auto& [key, value] : kv) {
        if (std::find(expected.begin(), expected.end(), key) == expected.end())
            throw std::runtime_error(path.string() + ": unknown key '" + key + "'");
    }
    for (const auto& key : expected) {
        if (!kv.count(key))
            throw std::runtime_error(path.string() + ": missing key '" + key + "'");
    }

    BudgetPlan plan;
    plan.budget = parse_int(kv["budget_B"]);
    plan.alpha = parse_double(kv["alpha"]);
    plan.n0 = parse_double(kv["n0"]);
    plan.cv_squared = parse_double(kv["cv_squared"]);
    plan.steps = parse_int(kv["T"]);
    plan.b_star = parse_double(kv["b_star"]);
    plan.gamma = parse_double(kv["gamma"]);
    if (plan.budget <= 0 || plan.steps <= 0 || !(plan.alpha > 0.0 && plan.alpha <= 1.0) ||
        !(plan.b_star >= 0.0 && plan.b_star < 1.0) || !(plan.gamma > 0.0 && plan.gamma < 1.0) ||
        !(plan.n0 > 0.0) || !(plan.cv_squared >= 0.0))
        throw std::runtime_error(path.string() + ": plan values out of range");
    return plan;
}

} // namespace dsel
