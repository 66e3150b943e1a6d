#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "dsel/generator.hpp"
#include "dsel/rng.hpp"
#include "dsel/trainer.hpp"

using namespace dsel;

namespace {

Dataset one_sample_dataset(std::vector<double> target) {
    Dataset ds;
    ds.embedding_dim = target.size();
    SampleRecord s;
    s.id = 0;
    s.embedding = std::move(target);
    ds.samples.push_back(std::move(s));
    return ds;
}

} // namespace

TEST_CASE("quadratic trainer: one gradient step closed form") {
    // distance^2 = 1, lambda = 1, eta = 0.01: dL = -eta*(1 - eta/2) = -0.00995
    auto ds = one_sample_dataset({2.0, 3.0});
    const std::vector<double> theta0 = {2.0 + 0.6, 3.0 - 0.8};
    QuadraticTrainer trainer(ds, 1.0, 0.01, 0, theta0);

    const double loss0 = trainer.loss_of_row(0);
    CHECK(loss0 == doctest::Approx(0.5));

    const SampleId batch[] = {0};
    const auto report = trainer.train_on(batch, {});
    CHECK(report.per_sample_loss_before.at(0) == doctest::Approx(0.5));
    const double loss1 = trainer.loss_of_row(0);
    CHECK(loss1 - loss0 == doctest::Approx(-0.00995).epsilon(1e-12));
}

TEST_CASE("quadratic trainer: eta 0 is a no-op") {
    auto ds = one_sample_dataset({1.0, 1.0});
    QuadraticTrainer trainer(ds, 1.0, 0.0, 3);
    const auto before = trainer.theta();
    const SampleId batch[] = {0};
    const auto report = trainer.train_on(batch, {});
    CHECK(report.update_energy == doctest::Approx(0.0));
    CHECK(trainer.theta() == before);
}

TEST_CASE("quadratic trainer: identical samples get identical losses") {
    Dataset ds;
    ds.embedding_dim = 2;
    for (SampleId id = 0; id < 2; ++id) {
        SampleRecord s;
        s.id = id;
        s.embedding = {4.0, -1.0};
        ds.samples.push_back(std::move(s));
    }
    QuadraticTrainer trainer(ds, 2.0, 0.05, 11);
    const SampleId batch[] = {0, 1};
    const auto report = trainer.train_on(batch, {});
    CHECK(report.per_sample_loss_before.at(0) == report.per_sample_loss_before.at(1));
    CHECK(trainer.loss_of_row(0) == trainer.loss_of_row(1));
}

TEST_CASE("quadratic trainer: reported losses equal independent re-evaluation bitwise") {
    GenOptions gen;
    gen.cluster_sizes = {40};
    gen.dim = 3;
    gen.seed = 5;
    auto planted = generate_planted(gen);
    QuadraticTrainer trainer(planted.dataset, 1.5, 0.02, 17);

    const auto theta_before = trainer.theta();
    std::vector<SampleId> batch = {3, 9, 21, 30};
    const auto report = trainer.train_on(batch, {});
    for (const auto id : batch) {
        double d2 = 0.0;
        const auto& target = planted.dataset.samples[id].embedding;
        for (std::size_t j = 0; j < theta_before.size(); ++j) {
            const double d = theta_before[j] - target[j];
            d2 += d * d;
        }
        CHECK(report.per_sample_loss_before.at(id) == 0.5 * 1.5 * d2);
    }
}

TEST_CASE("quadratic trainer: halving eta halves the first-order relative error") {
    auto rel_error = [](double eta) {
        auto ds = one_sample_dataset({0.0, 0.0});
        const std::vector<double> theta0 = {0.8, 0.6};
        QuadraticTrainer trainer(ds, 1.0, eta, 0, theta0);
        const double before = trainer.loss_of_row(0);
        const double grad_energy = 0.8 * 0.8 + 0.6 * 0.6; // lambda = 1
        const SampleId batch[] = {0};
        trainer.train_on(batch, {});
        const double exact = trainer.loss_of_row(0) - before;
        return std::abs(exact - (-eta * grad_energy)) / (eta * grad_energy);
    };
    const double e1 = rel_error(0.01);
    const double e2 = rel_error(0.005);
    CHECK(e1 == doctest::Approx(0.005).epsilon(1e-9));
    CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.05));
    CHECK(e1 / e2 >= 1.9);
    CHECK(e1 / e2 <= 2.1);
}

TEST_CASE("logistic trainer: repeated training on one class reduces its loss") {
    GenOptions gen;
    gen.cluster_sizes = {30, 30};
    gen.dim = 4;
    gen.seed = 9;
    auto planted = generate_planted(gen);
    LogisticTrainer trainer(planted.dataset, planted.labels, planted.num_classes, 0.3, 1);

    std::vector<SampleId> batch;
    for (SampleId id = 0; id < 30; ++id)
        batch.push_back(id); // all of cluster 0

    double prev = std::numeric_limits<double>::infinity();
    for (int step = 0; step < 10; ++step) {
        const auto report = trainer.train_on(batch, {});
        double mean = 0.0;
        for (const auto& [id, loss] : report.per_sample_loss_before)
            mean += loss;
        mean /= static_cast<double>(report.per_sample_loss_before.size());
        CHECK(mean < prev);
        prev = mean;
    }
}

TEST_CASE("logistic trainer: eta 0 leaves losses unchanged") {
    GenOptions gen;
    gen.cluster_sizes = {20};
    gen.dim = 3;
    gen.seed = 2;
    auto planted = generate_planted(gen);
    LogisticTrainer trainer(planted.dataset, planted.labels,
                            std::max(planted.num_classes, 2), 0.0, 1);
    const auto before = trainer.score_all();
    std::vector<SampleId> batch = {0, 5, 7};
    trainer.train_on(batch, {});
    const auto after = trainer.score_all();
    CHECK(before == after);
}

TEST_CASE("logistic trainer: batch order does not change the report") {
    GenOptions gen;
    gen.cluster_sizes = {50, 50};
    gen.dim = 5;
    gen.seed = 31;
    auto planted = generate_planted(gen);

    std::vector<SampleId> batch = {4, 17, 63, 72, 90, 8, 55};
    auto shuffled = batch;
    std::mt19937 rng(99);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);

    LogisticTrainer a(planted.dataset, planted.labels, planted.num_classes, 0.2, 1);
    LogisticTrainer b(planted.dataset, planted.labels, planted.num_classes, 0.2, 1);
    const auto ra = a.train_on(batch, {});
    const auto rb = b.train_on(shuffled, {});

    CHECK(ra.per_sample_loss_before == rb.per_sample_loss_before);
    CHECK(ra.update_energy == rb.update_energy);
    CHECK(ra.update_dot_prev == rb.update_dot_prev);
    CHECK(ra.update_direction == rb.update_direction);
}

TEST_CASE("logistic trainer: softmax guard keeps extreme logits finite") {
    Dataset ds;
    ds.embedding_dim = 2;
    for (SampleId id = 0; id < 4; ++id) {
        SampleRecord s;
        s.id = id;
        s.embedding = {id % 2 ? 600.0 : -600.0, 1.0};
        ds.samples.push_back(std::move(s));
    }
    std::vector<int> labels = {0, 1, 0, 1};
    LogisticTrainer trainer(ds, labels, 2, 5.0, 3);
    std::vector<SampleId> batch = {0, 1, 2, 3};
    for (int step = 0; step < 50; ++step) {
        const auto report = trainer.train_on(batch, {});
        for (const auto& [id, loss] : report.per_sample_loss_before) {
            CHECK(std::isfinite(loss));
            CHECK(loss >= 0.0);
        }
    }
}

TEST_CASE("Cauchy-Schwarz holds on consecutive reports") {
    GenOptions gen;
    gen.cluster_sizes = {60};
    gen.dim = 4;
    gen.seed = 55;
    auto planted = generate_planted(gen);
    QuadraticTrainer trainer(planted.dataset, 1.0, 0.1, 5);

    double prev_energy = 0.0;
    Rng rng(3);
    for (int step = 0; step < 20; ++step) {
        std::vector<SampleId> batch;
        for (int i = 0; i < 10; ++i)
            batch.push_back(static_cast<SampleId>(rng.below(60)));
        const auto report = trainer.train_on(batch, {});
        const double bound =
            std::sqrt(report.update_energy * prev_energy) * (1.0 + 1e-9) + 1e-12;
        CHECK(std::abs(report.update_dot_prev) <= bound);
        prev_energy = report.update_energy;
    }
}

TEST_CASE("extract_gradient_stats rules") {
    GradientStats stats;
    stats.clusters.resize(3);

    TrainStepReport report;
    report.eta = 0.1;
    report.update_energy = 4.0;
    report.update_dot_prev = 0.0;
    report.update_dot_cluster = 0.0;
    report.update_direction = {2.0, 0.0};

    // first-ever selection: self-reference, forced tie-break path
    auto s1 = extract_gradient_stats(report, stats, 1, 1);
    CHECK(s1.cluster_energy == doctest::Approx(4.0));
    CHECK(s1.prev_energy == doctest::Approx(4.0));
    CHECK(s1.cos_phi == doctest::Approx(1.0));
    CHECK(optimal_beta(s1.cluster_energy, s1.prev_energy, s1.cos_phi) ==
          doctest::Approx(0.5));
    CHECK(s1.clusters[1].last_selected_iter == 1);
    CHECK(s1.clusters[1].energy == doctest::Approx(4.0));

    // orthogonal follow-up on the same cluster
    TrainStepReport next;
    next.eta = 0.1;
    next.update_energy = 9.0;
    next.update_dot_prev = 0.0;
    next.update_dot_cluster = 0.0; // orthogonal to the stored direction
    next.update_direction = {0.0, 3.0};
    auto s2 = extract_gradient_stats(next, s1, 1, 2);
    CHECK(s2.cluster_energy == doctest::Approx(4.0)); // pre-refresh energy
    CHECK(s2.prev_energy == doctest::Approx(9.0));
    CHECK(s2.cos_phi == doctest::Approx(0.0));
    CHECK(s2.clusters[1].energy == doctest::Approx(9.0)); // refreshed

    // exact alignment: dot = sqrt(e1 * e2)
    TrainStepReport aligned;
    aligned.eta = 0.1;
    aligned.update_energy = 16.0;
    aligned.update_dot_cluster = std::sqrt(16.0 * 9.0);
    aligned.update_direction = {0.0, 4.0};
    auto s3 = extract_gradient_stats(aligned, s2, 1, 3);
    CHECK(s3.cos_phi == doctest::Approx(1.0));

    // zero current energy with history: stated cos_phi = 0 rule
    TrainStepReport zero;
    zero.eta = 0.1;
    zero.update_energy = 0.0;
    zero.update_direction = {0.0, 0.0};
    auto s4 = extract_gradient_stats(zero, s3, 1, 4);
    CHECK(s4.cos_phi == doctest::Approx(0.0));
}

TEST_CASE("sketch_project is deterministic and bounds dots") {
    Rng rng(77);
    std::vector<double> v(1000);
    std::vector<double> w(1000);
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = rng.gaussian();
        w[i] = rng.gaussian();
    }
    const auto sv = sketch_project(v, 42);
    const auto sv2 = sketch_project(v, 42);
    CHECK(sv == sv2);
    CHECK(sv.size() == kSketchDim);
    const auto sw = sketch_project(w, 42);

    double ev = 0.0;
    double ew = 0.0;
    double dot = 0.0;
    for (std::size_t k = 0; k < sv.size(); ++k) {
        ev += sv[k] * sv[k];
        ew += sw[k] * sw[k];
        dot += sv[k] * sw[k];
    }
    CHECK(std::abs(dot) <= std::sqrt(ev * ew) * (1.0 + 1e-9));
    // Johnson-Lindenstrauss-style norm preservation, loose statistical bound
    double true_norm = 0.0;
    for (double x : v)
        true_norm += x * x;
    CHECK(ev == doctest::Approx(true_norm).epsilon(0.35));
}
