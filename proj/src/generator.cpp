#include "dsel/generator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "dsel/numfmt.hpp"
#include "dsel/rng.hpp"

namespace dsel {

namespace {

std::vector<double> unit_direction(Rng& rng, std::size_t dim) {
    std::vector<double> v(dim);
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (auto& x : v) {
            x = rng.gaussian();
            norm2 += x * x;
        }
    } while (norm2 <= 1e-12);
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& x : v)
        x *= inv;
    return v;
}

} // namespace

PlantedSet generate_planted(const GenOptions& opts) {
    const int k = static_cast<int>(opts.cluster_sizes.size());
    if (k < 1)
        throw std::invalid_argument("generate_planted: need at least one cluster");
    for (auto s : opts.cluster_sizes)
        if (s <= 0)
            throw std::invalid_argument("generate_planted: cluster sizes must be positive");
    if (opts.dim < 1)
        throw std::invalid_argument("generate_planted: dim must be >= 1");
    if (opts.informative_cluster >= k)
        throw std::invalid_argument("generate_planted: informative cluster out of range");

    Rng rng(mix_seed(opts.seed, 0xda7a));
    PlantedSet out;
    out.num_classes = std::max(k, 2);
    out.dataset.embedding_dim = opts.dim;

    std::vector<std::vector<double>> centers(k);
    for (int j = 0; j < k; ++j) {
        centers[j] = unit_direction(rng, opts.dim);
        const double r =
            (j == opts.informative_cluster || opts.informative_cluster < 0)
                ? opts.radius
                : opts.noise_radius;
        for (auto& x : centers[j])
            x *= r;
    }

    // Rank clusters by mean initial loss under a fixed probe parameter; ifd is
    // monotone in that rank so each cluster lands in its own difficulty bin.
    std::vector<double> probe = unit_direction(rng, opts.dim);
    std::vector<double> probe_loss(k);
    for (int j = 0; j < k; ++j) {
        double dot = 0.0;
        for (std::size_t d = 0; d < opts.dim; ++d)
            dot += probe[d] * centers[j][d];
        // larger margin from the probe hyperplane = easier = lower loss proxy
        probe_loss[j] = -dot;
    }
    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (probe_loss[a] != probe_loss[b])
            return probe_loss[a] < probe_loss[b];
        return a < b;
    });
    std::vector<int> rank(k);
    for (int pos = 0; pos < k; ++pos)
        rank[order[pos]] = pos;

    SampleId next_id = 0;
    for (int j = 0; j < k; ++j) {
        for (std::int64_t i = 0; i < opts.cluster_sizes[j]; ++i) {
            SampleRecord s;
            s.id = next_id++;
            s.embedding.resize(opts.dim);
            for (std::size_t d = 0; d < opts.dim; ++d)
                s.embedding[d] = centers[j][d] + opts.sigma * rng.gaussian();
            // jitter stays strictly inside the rank's bin
            s.ifd = (rank[j] + 0.1 + 0.8 * rng.unit()) * opts.bin_width;
            s.current_loss = std::log(static_cast<double>(out.num_classes));
            s.utility = s.current_loss;

            int label = j;
            if (opts.informative_cluster >= 0 && j != opts.informative_cluster)
                label = static_cast<int>(rng.below(out.num_classes));
            out.labels.push_back(label);
            out.true_cluster.push_back(j);
            out.dataset.samples.push_back(std::move(s));
        }
    }

    if (opts.validation_per_cluster > 0) {
        const int src = opts.informative_cluster >= 0 ? opts.informative_cluster : 0;
        for (std::int64_t i = 0; i < opts.validation_per_cluster; ++i) {
            std::vector<double> f(opts.dim);
            for (std::size_t d = 0; d < opts.dim; ++d)
                f[d] = centers[src][d] + opts.sigma * rng.gaussian();
            out.validation_features.push_back(std::move(f));
            out.validation_labels.push_back(src);
        }
    }
    return out;
}

void write_labels(const std::filesystem::path& path, const Dataset& ds,
                  const std::vector<int>& labels) {
    if (labels.size() != ds.samples.size())
        throw std::invalid_argument("write_labels: label/sample count mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "id,label\n";
    for (std::size_t i = 0; i < labels.size(); ++i)
        out << ds.samples[i].id << ',' << labels[i] << '\n';
    if (!out)
        throw std::runtime_error("write failed: " + path.string());
}

std::vector<int> read_labels(const std::filesystem::path& path, const Dataset& ds) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || (line != "id,label" && line != "id,label\r"))
        throw std::runtime_error(path.string() + ":1: expected header 'id,label'");
    std::map<SampleId, int> by_id;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": expected 'id,label'");
        const SampleId id = parse_int(std::string_view(line).substr(0, comma));
        const int label = static_cast<int>(
            parse_int(std::string_view(line).substr(comma + 1)));
        by_id[id] = label;
    }
    std::vector<int> labels;
    labels.reserve(ds.samples.size());
    for (const auto& s : ds.samples) {
        const auto it = by_id.find(s.id);
        if (it == by_id.end())
            throw std::runtime_error(path.string() + ": no label for sample id " +
                                     std::to_string(s.id));
        labels.push_back(it->second);
    }
    return labels;
}

} // namespace dsel
