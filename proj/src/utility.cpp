#include "dsel/utility.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dsel {

double optimal_beta(double g_cluster, double g_prev, double cos_phi) {
    if (!(g_cluster >= 0.0) || !(g_prev >= 0.0))
        throw std::invalid_argument("optimal_beta: energies must be nonnegative");
    if (!(cos_phi >= -1.0 && cos_phi <= 1.0))
        throw std::invalid_argument("optimal_beta: cos_phi must be in [-1,1]");
    const double cross = std::sqrt(g_cluster * g_prev) * cos_phi;
    const double denom = g_cluster + g_prev - 2.0 * cross;
    if (std::abs(denom) < 1e-12)
        return 0.5; // directions coincide in norm and angle: any blend is optimal
    const double beta = (g_prev - cross) / denom;
    return std::clamp(beta, 0.0, 1.0);
}

double predict_loss_change(const GradientStats& stats, double beta) {
    if (!(beta >= 0.0 && beta <= 1.0))
        throw std::invalid_argument("predict_loss_change: beta must be in [0,1]");
    if (!(stats.cluster_energy >= 0.0) || !(stats.prev_energy >= 0.0))
        throw std::invalid_argument("predict_loss_change: energies must be nonnegative");
    if (!(stats.cos_phi >= -1.0 && stats.cos_phi <= 1.0))
        throw std::invalid_argument("predict_loss_change: cos_phi must be in [-1,1]");
    if (!(stats.eta >= 0.0))
        throw std::invalid_argument("predict_loss_change: eta must be nonnegative");
    const double cross = std::sqrt(stats.cluster_energy * stats.prev_energy) * stats.cos_phi;
    double quad = beta * beta * stats.cluster_energy +
                  (1.0 - beta) * (1.0 - beta) * stats.prev_energy +
                  2.0 * beta * (1.0 - beta) * cross;
    // squared norm of a convex combination; clip rounding residue
    quad = std::max(quad, 0.0);
    return -stats.eta * quad;
}

double update_utility(double prev_utility, double current_loss,
                      double predicted_change, double b) {
    if (!(b >= 0.0 && b < 1.0))
        throw std::invalid_argument("update_utility: b must be in [0,1)");
    return (1.0 - b) * (current_loss + predicted_change) + b * prev_utility;
}

ErrorBound error_bound(double eta, double hessian_norm_max, double grad_energy,
                       double grad_residual_energy) {
    if (!(eta >= 0.0) || !(hessian_norm_max >= 0.0) || !(grad_energy >= 0.0) ||
        !(grad_residual_energy >= 0.0))
        throw std::invalid_argument("error_bound: inputs must be nonnegative");
    ErrorBound eb;
    eb.taylor = 0.5 * eta * eta * hessian_norm_max * grad_energy;
    eb.approx = eta * grad_residual_energy;
    return eb;
}

} // namespace dsel
