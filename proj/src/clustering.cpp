#include "dsel/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "dsel/rng.hpp"

namespace dsel {

double compute_ifd(double ppl_conditional, double ppl_unconditional) {
    if (!(ppl_conditional > 0.0))
        throw std::invalid_argument("compute_ifd: ppl_conditional must be positive, got " +
                                    std::to_string(ppl_conditional));
    if (!(ppl_unconditional > 0.0))
        throw std::invalid_argument("compute_ifd: ppl_unconditional must be positive, got " +
                                    std::to_string(ppl_unconditional));
    return ppl_conditional / ppl_unconditional;
}

std::vector<DifficultyCluster> bin_by_difficulty(std::span<SampleRecord> samples,
                                                 double bin_width, int num_bins) {
    if (!(bin_width > 0.0))
        throw std::invalid_argument("bin_by_difficulty: bin_width must be positive");
    if (num_bins < 1)
        throw std::invalid_argument("bin_by_difficulty: num_bins must be >= 1");

    // raw bin -> member ids; std::map keeps ascending ifd order for free
    std::map<int, std::vector<SampleId>> bins;
    for (const auto& s : samples) {
        if (s.ifd < 0.0)
            throw std::invalid_argument("bin_by_difficulty: negative ifd for id " +
                                        std::to_string(s.id));
        int raw = static_cast<int>(std::floor(s.ifd / bin_width));
        raw = std::min(raw, num_bins - 1);
        bins[raw].push_back(s.id);
    }

    std::map<int, int> dense_of_raw;
    std::vector<DifficultyCluster> out;
    int next = 0;
    for (auto& [raw, ids] : bins) {
        std::sort(ids.begin(), ids.end());
        DifficultyCluster dc;
        dc.index = next;
        dc.ifd_lo = raw * bin_width;
        dc.ifd_hi = (raw == num_bins - 1) ? std::numeric_limits<double>::infinity()
                                          : (raw + 1) * bin_width;
        TaskCluster tc;
        tc.index = 0;
        tc.member_ids = std::move(ids);
        dc.task_clusters.push_back(std::move(tc));
        dense_of_raw[raw] = next++;
        out.push_back(std::move(dc));
    }

    for (auto& s : samples) {
        int raw = std::min(static_cast<int>(std::floor(s.ifd / bin_width)), num_bins - 1);
        s.difficulty_bin = dense_of_raw.at(raw);
        s.task_cluster = 0;
    }
    return out;
}

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double diff = a[j] - b[j];
        d += diff * diff;
    }
    return d;
}

} // namespace

KMeansResult kmeans(const std::vector<std::vector<double>>& points, int k,
                    int max_iters, std::uint64_t seed) {
    const std::size_t n = points.size();
    if (n == 0)
        throw std::invalid_argument("kmeans: empty input");
    if (k < 1 || static_cast<std::size_t>(k) > n)
        throw std::invalid_argument("kmeans: k must be in [1, #points], got k=" +
                                    std::to_string(k) + " for " + std::to_string(n) +
                                    " points");
    const std::size_t dim = points[0].size();
    for (const auto& p : points)
        if (p.size() != dim)
            throw std::invalid_argument("kmeans: inconsistent point dimensions");

    Rng rng(seed);
    KMeansResult res;
    res.centroids.reserve(k);

    // k-means++ seeding
    res.centroids.push_back(points[rng.below(n)]);
    std::vector<double> min_d(n);
    for (std::size_t i = 0; i < n; ++i)
        min_d[i] = sq_dist(points[i], res.centroids[0]);
    while (res.centroids.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (double d : min_d)
            total += d;
        std::size_t pick;
        if (total > 0.0) {
            pick = rng.categorical(min_d);
        } else {
            pick = rng.below(n); // all points coincide with a centroid
        }
        res.centroids.push_back(points[pick]);
        for (std::size_t i = 0; i < n; ++i)
            min_d[i] = std::min(min_d[i], sq_dist(points[i], res.centroids.back()));
    }

    res.assignments.assign(n, -1);
    std::vector<int> counts(k, 0);
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        double objective = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = sq_dist(points[i], res.centroids[0]);
            for (int c = 1; c < k; ++c) {
                const double d = sq_dist(points[i], res.centroids[c]);
                if (d < best_d) { // strict: ties stay with the lowest index
                    best_d = d;
                    best = c;
                }
            }
            objective += best_d;
            if (res.assignments[i] != best) {
                res.assignments[i] = best;
                changed = true;
            }
        }

        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i)
            ++counts[res.assignments[i]];

        // Re-seed any emptied cluster with the point farthest from its
        // centroid (lowest index on ties). Moving it can only shrink the
        // objective, so monotonicity is preserved.
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0)
                continue;
            std::size_t far_i = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts[res.assignments[i]] <= 1)
                    continue;
                const double d = sq_dist(points[i], res.centroids[res.assignments[i]]);
                if (d > far_d) {
                    far_d = d;
                    far_i = i;
                }
            }
            --counts[res.assignments[far_i]];
            res.assignments[far_i] = c;
            ++counts[c];
            changed = true;
        }

        for (int c = 0; c < k; ++c)
            std::fill(res.centroids[c].begin(), res.centroids[c].end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            auto& cen = res.centroids[res.assignments[i]];
            for (std::size_t j = 0; j < dim; ++j)
                cen[j] += points[i][j];
        }
        for (int c = 0; c < k; ++c)
            for (std::size_t j = 0; j < dim; ++j)
                res.centroids[c][j] /= counts[c];

        res.iterations = iter + 1;
        res.objective = objective;
        if (!changed)
            break;
    }

    // Final objective under the final centroids/assignments.
    res.objective = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        res.objective += sq_dist(points[i], res.centroids[res.assignments[i]]);
    return res;
}

ClusterStats cluster_stats(std::span<const std::int64_t> sizes) {
    if (sizes.empty())
        throw std::invalid_argument("cluster_stats: at least one cluster required");
    double mean = 0.0;
    for (auto s : sizes) {
        if (s <= 0)
            throw std::invalid_argument("cluster_stats: sizes must be positive");
        mean += static_cast<double>(s);
    }
    mean /= static_cast<double>(sizes.size());
    double var = 0.0;
    for (auto s : sizes) {
        const double d = static_cast<double>(s) - mean;
        var += d * d;
    }
    var /= static_cast<double>(sizes.size()); // population convention
    return ClusterStats{mean, var / (mean * mean)};
}

std::vector<DifficultyCluster> partition_dataset(std::span<SampleRecord> samples,
                                                 const PartitionOptions& opts) {
    auto clusters = bin_by_difficulty(samples, opts.bin_width, opts.num_bins);
    if (opts.task_clusters < 1)
        throw std::invalid_argument("partition_dataset: task_clusters must be >= 1");

    std::map<SampleId, std::size_t> row_of;
    for (std::size_t i = 0; i < samples.size(); ++i)
        row_of[samples[i].id] = i;

    for (auto& dc : clusters) {
        std::vector<SampleId> ids = std::move(dc.task_clusters[0].member_ids);
        dc.task_clusters.clear();
        const int m = std::min<int>(opts.task_clusters, static_cast<int>(ids.size()));

        std::vector<std::vector<double>> pts;
        pts.reserve(ids.size());
        for (auto id : ids)
            pts.push_back(samples[row_of.at(id)].embedding);
        auto km = kmeans(pts, m, opts.kmeans_max_iters,
                         mix_seed(opts.seed, static_cast<std::uint64_t>(dc.index)));

        dc.task_clusters.resize(m);
        for (int c = 0; c < m; ++c) {
            dc.task_clusters[c].index = c;
            dc.task_clusters[c].centroid = km.centroids[c];
        }
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const int c = km.assignments[i];
            dc.task_clusters[c].member_ids.push_back(ids[i]);
            samples[row_of.at(ids[i])].task_cluster = c;
        }
        // k <= |ids| and the empty-cluster rule guarantee non-empty members
        for (const auto& tc : dc.task_clusters)
            if (tc.member_ids.empty())
                throw std::logic_error("partition_dataset: empty task cluster");
    }
    return clusters;
}

} // namespace dsel
