#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dsel/dataset.hpp"

namespace dsel {

// Synthetic planted-cluster pool. Cluster j sits on a unit direction scaled
// by its radius; features get isotropic Gaussian jitter. ifd values are a
// monotone function of the cluster's mean initial loss under a fixed probe
// parameter vector: clusters are ranked by that loss and cluster rank r maps
// into [r*bin_width, (r+1)*bin_width), so each planted cluster becomes its
// own difficulty bin at the default bin width.
//
// When informative_cluster >= 0, that cluster keeps its true class label and
// every other cluster gets uniformly random labels (a pool where exactly one
// difficulty bin rewards training); sample labels land in the sidecar file.
struct GenOptions {
    std::vector<std::int64_t> cluster_sizes;
    std::size_t dim = 8;
    std::uint64_t seed = 0;
    double bin_width = 0.1;
    double sigma = 0.5;          // within-cluster feature jitter
    double radius = 4.0;         // informative cluster distance from origin
    double noise_radius = 1.0;   // other clusters' distance from origin
    int informative_cluster = -1; // -1: all clusters keep true labels
    std::int64_t validation_per_cluster = 0; // validation rows drawn from the
                                             // informative cluster
};

struct PlantedSet {
    Dataset dataset;
    std::vector<int> labels;       // class per dataset row
    std::vector<int> true_cluster; // planted cluster per dataset row
    std::vector<std::vector<double>> validation_features;
    std::vector<int> validation_labels;
    int num_classes = 0;
};

PlantedSet generate_planted(const GenOptions& opts);

// Sidecar label file: header "id,label", one row per sample.
void write_labels(const std::filesystem::path& path, const Dataset& ds,
                  const std::vector<int>& labels);
std::vector<int> read_labels(const std::filesystem::path& path, const Dataset& ds);

} // namespace dsel
