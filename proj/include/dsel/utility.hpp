#pragma once

#include <cstdint>
#include <vector>

namespace dsel {

// Gradient telemetry the engine keeps between iterations: one entry per
// difficulty cluster (energy and direction of the update applied the last
// time that cluster was trained) plus the globals describing the most recent
// step. Energies are squared norms of parameter-update vectors (or of their
// fixed-seed sketches); directions live in the same telemetry space.
struct GradientStats {
    struct ClusterEntry {
        std::int64_t last_selected_iter = -1; // -1: never trained
        double energy = 0.0;
        std::vector<double> direction;
    };

    std::vector<ClusterEntry> clusters;

    // Inputs for the loss-change prediction of the latest step:
    double cluster_energy = 0.0; // g_k: trained cluster's energy at its prior selection
    double prev_energy = 0.0;    // g_prev: energy of the latest update
    double cos_phi = 1.0;        // alignment between those two directions
    double eta = 0.0;            // learning rate of the latest step
};

// Convex-combination weight between the cluster's historical update direction
// and the latest step's direction, minimizing the squared norm of the blended
// vector. Clamped to [0, 1]; returns 0.5 when the two directions coincide in
// norm and angle (denominator below 1e-12).
double optimal_beta(double g_cluster, double g_prev, double cos_phi);

// Predicted mean loss change for the trained batch:
//   -eta * (beta^2 g_k + (1-beta)^2 g_prev + 2 beta (1-beta) sqrt(g_k g_prev) cos_phi)
// Always <= 0: the bracket is the squared norm of a convex combination.
double predict_loss_change(const GradientStats& stats, double beta);

// One step of the exponentially smoothed utility recursion:
//   (1-b) * (current_loss + predicted_change) + b * prev_utility
double update_utility(double prev_utility, double current_loss,
                      double predicted_change, double b);

struct ErrorBound {
    double taylor = 0.0; // 0.5 eta^2 max||H|| ||grad||^2
    double approx = 0.0; // eta * ||grad residual||^2
    double total() const { return taylor + approx; }
};

ErrorBound error_bound(double eta, double hessian_norm_max, double grad_energy,
                       double grad_residual_energy);

} // namespace dsel
