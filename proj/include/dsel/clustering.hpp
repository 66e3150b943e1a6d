#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dsel/types.hpp"

namespace dsel {

struct TaskCluster {
    int index = 0;
    std::vector<SampleId> member_ids; // ascending id order
    std::vector<double> centroid;
};

// A difficulty bin: the unit the scheduler chooses among. Holds its k-means
// task sub-clusters; its member set is the union of theirs.
struct DifficultyCluster {
    int index = 0;
    double ifd_lo = 0.0;
    double ifd_hi = 0.0; // half-open [lo, hi); +inf for the clamped top bin
    std::vector<TaskCluster> task_clusters;

    std::size_t size() const {
        std::size_t n = 0;
        for (const auto& tc : task_clusters)
            n += tc.member_ids.size();
        return n;
    }
};

struct ClusterStats {
    double mean_size = 0.0;
    double cv_squared = 0.0; // population convention
};

// Perplexity ratio PPL(y|x) / PPL(y). Both inputs must be positive.
double compute_ifd(double ppl_conditional, double ppl_unconditional);

// Buckets samples by ifd into bins of the given width; values at or above
// num_bins * bin_width are clamped into the last bin. Empty bins are dropped
// and the survivors re-indexed densely in ascending ifd order. Each returned
// cluster starts with a single task cluster holding all members; assigns
// difficulty_bin (and task_cluster = 0) on the samples.
std::vector<DifficultyCluster> bin_by_difficulty(std::span<SampleRecord> samples,
                                                 double bin_width, int num_bins);

struct KMeansResult {
    std::vector<int> assignments;
    std::vector<std::vector<double>> centroids;
    double objective = 0.0; // sum of squared distances to assigned centroid
    int iterations = 0;
};

// Lloyd's algorithm with seeded k-means++ initialization. Deterministic given
// the seed; nearest-centroid ties break toward the lowest centroid index;
// emptied clusters are re-seeded with the point farthest from its centroid.
KMeansResult kmeans(const std::vector<std::vector<double>>& points, int k,
                    int max_iters, std::uint64_t seed);

ClusterStats cluster_stats(std::span<const std::int64_t> sizes);

struct PartitionOptions {
    double bin_width = 0.1;
    int num_bins = 10;
    int task_clusters = 4; // reduced to the bin population when smaller
    int kmeans_max_iters = 50;
    std::uint64_t seed = 0;
};

// Full offline partition: difficulty bins, then k-means task clusters within
// each bin over the sample embeddings. Updates difficulty_bin / task_cluster
// on every sample.
std::vector<DifficultyCluster> partition_dataset(std::span<SampleRecord> samples,
                                                 const PartitionOptions& opts);

} // namespace dsel
