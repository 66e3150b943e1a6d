#include "dsel/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace dsel {

std::vector<SampleId> select_samples(const DifficultyCluster& cluster,
                                     std::int64_t quota,
                                     const std::function<double(SampleId)>& utility_of) {
    if (quota < 1)
        throw std::invalid_argument("select_samples: quota must be >= 1");
    if (cluster.task_clusters.empty())
        throw std::invalid_argument("select_samples: empty cluster");

    const auto m = static_cast<std::int64_t>(cluster.task_clusters.size());
    std::vector<std::int64_t> share(m, quota / m);

    // remainder goes one-by-one to the largest task clusters
    std::vector<int> by_size(m);
    std::iota(by_size.begin(), by_size.end(), 0);
    std::stable_sort(by_size.begin(), by_size.end(), [&](int a, int b) {
        return cluster.task_clusters[a].member_ids.size() >
               cluster.task_clusters[b].member_ids.size();
    });
    for (std::int64_t r = 0; r < quota % m; ++r)
        ++share[by_size[r]];

    std::vector<SampleId> out;
    out.reserve(quota);
    std::vector<std::pair<double, SampleId>> ranked;
    for (std::int64_t c = 0; c < m; ++c) {
        const auto& members = cluster.task_clusters[c].member_ids;
        const auto take = std::min<std::int64_t>(share[c],
                                                 static_cast<std::int64_t>(members.size()));
        if (take <= 0)
            continue;
        ranked.clear();
        ranked.reserve(members.size());
        for (const auto id : members)
            ranked.emplace_back(utility_of(id), id);
        // top `take` by utility, ties to the lowest id
        auto better = [](const std::pair<double, SampleId>& a,
                         const std::pair<double, SampleId>& b) {
            if (a.first != b.first)
                return a.first > b.first;
            return a.second < b.second;
        };
        std::nth_element(ranked.begin(), ranked.begin() + (take - 1), ranked.end(), better);
        std::sort(ranked.begin(), ranked.begin() + take, better);
        for (std::int64_t i = 0; i < take; ++i)
            out.push_back(ranked[i].second);
    }
    return out;
}

Engine::Engine(Dataset& data, std::vector<DifficultyCluster> clusters,
               Trainer& trainer, const EngineConfig& config, EventLogWriter* log)
    : data_(data), clusters_(std::move(clusters)), trainer_(trainer), config_(config),
      log_(log),
      bandit_(make_bandit(static_cast<int>(clusters_.size()), config.plan.gamma,
                          mix_seed(config.selection_seed, 0xa53), config.bandit_epsilon)),
      selection_rng_(mix_seed(config.selection_seed, 0x4a11d)) {
    if (clusters_.empty())
        throw std::invalid_argument("Engine: no difficulty clusters");
    if (data_.samples.empty())
        throw std::invalid_argument("Engine: empty dataset");
    if (!(config_.plan.b_star >= 0.0 && config_.plan.b_star < 1.0))
        throw std::invalid_argument("Engine: plan.b_star must be in [0,1)");
    if (config_.plan.budget < 0)
        throw std::invalid_argument("Engine: negative budget");

    row_of_id_.reserve(data_.samples.size());
    for (std::size_t i = 0; i < data_.samples.size(); ++i) {
        if (!row_of_id_.emplace(data_.samples[i].id, i).second)
            throw std::invalid_argument("Engine: duplicate sample id " +
                                        std::to_string(data_.samples[i].id));
    }

    budget_left_ = config_.plan.budget;
    pull_counts_.assign(clusters_.size(), 0);
    stats_.clusters.resize(clusters_.size());

    // initial full scoring pass: utilities start at the first-pass losses
    const auto losses = trainer_.score_all();
    if (losses.size() != data_.samples.size())
        throw std::runtime_error("Engine: score_all size mismatch");
    for (std::size_t i = 0; i < losses.size(); ++i) {
        data_.samples[i].current_loss = losses[i];
        data_.samples[i].utility = losses[i];
    }
}

bool Engine::step() {
    if (budget_left_ <= 0 || t_ >= config_.plan.steps)
        return false;
    const auto started = std::chrono::steady_clock::now();
    ++t_;

    const auto probs = arm_probabilities(bandit_);
    int arm;
    if (config_.scheduler == Scheduler::kRandom) {
        arm = static_cast<int>(selection_rng_.below(clusters_.size()));
    } else {
        arm = select_arm(bandit_, config_.arm_mode);
    }
    const auto& cluster = clusters_[arm];

    const auto desired = static_cast<std::int64_t>(
        std::floor(config_.plan.alpha * static_cast<double>(cluster.size())));
    const std::int64_t quota =
        std::min({desired, budget_left_, static_cast<std::int64_t>(cluster.size())});

    IterationEvent ev;
    ev.t = t_;
    ev.arm = arm;
    ev.probabilities = probs;

    if (quota < 1) {
        // nothing to train this round; no reward, no weight update
        ev.budget_left = budget_left_;
        ev.weights = bandit_.weights;
        ev.eta = 0.0;
    } else {
        auto utility_of = [this](SampleId id) {
            return data_.samples[row_of_id_.at(id)].utility;
        };
        const auto batch = select_samples(cluster, quota, utility_of);
        ++pull_counts_[arm];

        const auto report =
            trainer_.train_on(batch, stats_.clusters[arm].direction);
        const double cs_bound =
            std::sqrt(report.update_energy * stats_.prev_energy) * (1.0 + 1e-9) + 1e-12;
        if (std::abs(report.update_dot_prev) > cs_bound)
            throw std::runtime_error("Engine: trainer telemetry violates Cauchy-Schwarz");

        stats_ = extract_gradient_stats(report, stats_, arm, t_);
        const double beta =
            optimal_beta(stats_.cluster_energy, stats_.prev_energy, stats_.cos_phi);
        const double predicted = predict_loss_change(stats_, beta);

        std::vector<double> before;
        std::vector<double> after;
        before.reserve(batch.size());
        after.reserve(batch.size());
        for (const auto id : batch) {
            auto& s = data_.samples[row_of_id_.at(id)];
            const double loss = report.per_sample_loss_before.at(id);
            before.push_back(s.utility);
            s.current_loss = loss;
            s.utility = update_utility(s.utility, loss, predicted, config_.plan.b_star);
            s.last_selected_iter = t_;
            after.push_back(s.utility);
        }

        const double raw = info_gain_reward(before, after);
        const double norm = normalize_reward(bandit_, raw);
        if (config_.scheduler == Scheduler::kBandit)
            update_weight(bandit_, arm, norm, probs[arm]);

        budget_left_ -= static_cast<std::int64_t>(batch.size());
        total_selected_ += static_cast<std::int64_t>(batch.size());
        cumulative_drop_ += raw * static_cast<double>(batch.size());

        ev.batch = static_cast<std::int64_t>(batch.size());
        ev.budget_left = budget_left_;
        ev.beta_star = beta;
        ev.predicted_delta = predicted;
        double sum_b = 0.0;
        double sum_a = 0.0;
        for (double v : before)
            sum_b += v;
        for (double v : after)
            sum_a += v;
        ev.utility_before = sum_b / static_cast<double>(before.size());
        ev.utility_after = sum_a / static_cast<double>(after.size());
        ev.raw_reward = raw;
        ev.norm_reward = norm;
        ev.weights = bandit_.weights;
        ev.g_cluster = stats_.cluster_energy;
        ev.g_prev = stats_.prev_energy;
        ev.cos_phi = stats_.cos_phi;
        ev.eta = stats_.eta;
    }

    if (config_.record_wall_time) {
        ev.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - started)
                              .count();
    }
    events_.push_back(ev);
    if (log_) {
        log_->write_event(ev);
        if (config_.snapshot_cadence > 0 && t_ % config_.snapshot_cadence == 0)
            write_snapshot();
    }
    return budget_left_ > 0 && t_ < config_.plan.steps;
}

void Engine::write_snapshot() {
    UtilitySnapshot snap;
    snap.t = t_;
    snap.ids.reserve(data_.samples.size());
    snap.utilities.reserve(data_.samples.size());
    for (const auto& s : data_.samples) {
        snap.ids.push_back(s.id);
        snap.utilities.push_back(s.utility);
    }
    log_->write_snapshot(snap);
}

RunSummary Engine::run() {
    while (step()) {
    }
    RunSummary summary;
    summary.iterations = t_;
    summary.total_selected = total_selected_;
    summary.pull_counts = pull_counts_;
    summary.cumulative_utility_drop = cumulative_drop_;
    summary.final_validation_loss = trainer_.eval_validation();
    if (log_) {
        RunSummaryRecord rec;
        rec.iterations = summary.iterations;
        rec.total_selected = summary.total_selected;
        rec.pull_counts = summary.pull_counts;
        rec.cumulative_utility_drop = summary.cumulative_utility_drop;
        rec.final_validation_loss = summary.final_validation_loss;
        log_->write_summary(rec);
        log_->flush();
    }
    return summary;
}

} // namespace dsel
