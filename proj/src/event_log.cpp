#include "dsel/event_log.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "dsel/bandit.hpp"

namespace dsel {

using json = nlohmann::ordered_json;

namespace {

json meta_to_json(const RunMeta& m) {
    json j;
    j["type"] = "meta";
    j["schema_version"] = m.schema_version;
    j["scheduler"] = m.scheduler;
    j["arm_mode"] = m.arm_mode;
    j["selection_seed"] = m.selection_seed;
    j["trainer_seed"] = m.trainer_seed;
    j["budget"] = m.budget;
    j["steps"] = m.steps;
    j["alpha"] = m.alpha;
    j["b"] = m.b;
    j["gamma"] = m.gamma;
    j["epsilon"] = m.epsilon;
    j["num_arms"] = m.num_arms;
    j["cluster_sizes"] = m.cluster_sizes;
    j["trainer"] = m.trainer;
    j["snapshot_cadence"] = m.snapshot_cadence;
    j["record_wall_time"] = m.record_wall_time;
    return j;
}

json event_to_json(const IterationEvent& e) {
    json j;
    j["type"] = "iter";
    j["t"] = e.t;
    j["arm"] = e.arm;
    j["batch"] = e.batch;
    j["budget_left"] = e.budget_left;
    j["beta_star"] = e.beta_star;
    j["predicted_delta"] = e.predicted_delta;
    j["utility_before"] = e.utility_before;
    j["utility_after"] = e.utility_after;
    j["raw_reward"] = e.raw_reward;
    j["norm_reward"] = e.norm_reward;
    j["weights"] = e.weights;
    j["probabilities"] = e.probabilities;
    j["g_cluster"] = e.g_cluster;
    j["g_prev"] = e.g_prev;
    j["cos_phi"] = e.cos_phi;
    j["eta"] = e.eta;
    j["wall_time_ms"] = e.wall_time_ms;
    return j;
}

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line_no,
                       const std::string& what) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

} // namespace

EventLogWriter::EventLogWriter(const std::filesystem::path& path)
    : out_(path, std::ios::binary) {
    if (!out_)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
}

void EventLogWriter::write_meta(const RunMeta& meta) {
    out_ << meta_to_json(meta).dump() << '\n';
}

void EventLogWriter::write_event(const IterationEvent& ev) {
    out_ << event_to_json(ev).dump() << '\n';
}

void EventLogWriter::write_snapshot(const UtilitySnapshot& snap) {
    json j;
    j["type"] = "utility_snapshot";
    j["t"] = snap.t;
    j["ids"] = snap.ids;
    j["utilities"] = snap.utilities;
    out_ << j.dump() << '\n';
}

void EventLogWriter::write_summary(const RunSummaryRecord& summary) {
    json j;
    j["type"] = "summary";
    j["iterations"] = summary.iterations;
    j["total_selected"] = summary.total_selected;
    j["pull_counts"] = summary.pull_counts;
    j["cumulative_utility_drop"] = summary.cumulative_utility_drop;
    if (summary.final_validation_loss)
        j["final_validation_loss"] = *summary.final_validation_loss;
    else
        j["final_validation_loss"] = nullptr;
    out_ << j.dump() << '\n';
}

void EventLogWriter::flush() { out_.flush(); }

EventLog read_event_log(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    EventLog log;
    bool have_meta = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            fail(path, line_no, "empty line");
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            fail(path, line_no, "malformed JSON");
        try {
            const std::string type = j.at("type").get<std::string>();
            if (type == "meta") {
                RunMeta m;
                m.schema_version = j.at("schema_version").get<int>();
                m.scheduler = j.at("scheduler").get<std::string>();
                m.arm_mode = j.at("arm_mode").get<std::string>();
                m.selection_seed = j.at("selection_seed").get<std::uint64_t>();
                m.trainer_seed = j.at("trainer_seed").get<std::uint64_t>();
                m.budget = j.at("budget").get<std::int64_t>();
                m.steps = j.at("steps").get<std::int64_t>();
                m.alpha = j.at("alpha").get<double>();
                m.b = j.at("b").get<double>();
                m.gamma = j.at("gamma").get<double>();
                m.epsilon = j.at("epsilon").get<double>();
                m.num_arms = j.at("num_arms").get<int>();
                m.cluster_sizes = j.at("cluster_sizes").get<std::vector<std::int64_t>>();
                m.trainer = j.at("trainer").get<std::string>();
                m.snapshot_cadence = j.at("snapshot_cadence").get<int>();
                m.record_wall_time = j.at("record_wall_time").get<bool>();
                log.meta = m;
                have_meta = true;
            } else if (type == "iter") {
                IterationEvent e;
                e.t = j.at("t").get<std::int64_t>();
                e.arm = j.at("arm").get<int>();
                e.batch = j.at("batch").get<std::int64_t>();
                e.budget_left = j.at("budget_left").get<std::int64_t>();
                e.beta_star = j.at("beta_star").get<double>();
                e.predicted_delta = j.at("predicted_delta").get<double>();
                e.utility_before = j.at("utility_before").get<double>();
                e.utility_after = j.at("utility_after").get<double>();
                e.raw_reward = j.at("raw_reward").get<double>();
                e.norm_reward = j.at("norm_reward").get<double>();
                e.weights = j.at("weights").get<std::vector<double>>();
                e.probabilities = j.at("probabilities").get<std::vector<double>>();
                e.g_cluster = j.at("g_cluster").get<double>();
                e.g_prev = j.at("g_prev").get<double>();
                e.cos_phi = j.at("cos_phi").get<double>();
                e.eta = j.at("eta").get<double>();
                e.wall_time_ms = j.at("wall_time_ms").get<std::int64_t>();
                log.events.push_back(std::move(e));
            } else if (type == "utility_snapshot") {
                UtilitySnapshot s;
                s.t = j.at("t").get<std::int64_t>();
                s.ids = j.at("ids").get<std::vector<std::int64_t>>();
                s.utilities = j.at("utilities").get<std::vector<double>>();
                log.snapshots.push_back(std::move(s));
            } else if (type == "summary") {
                RunSummaryRecord s;
                s.iterations = j.at("iterations").get<std::int64_t>();
                s.total_selected = j.at("total_selected").get<std::int64_t>();
                s.pull_counts = j.at("pull_counts").get<std::vector<std::int64_t>>();
                s.cumulative_utility_drop = j.at("cumulative_utility_drop").get<double>();
                if (!j.at("final_validation_loss").is_null())
                    s.final_validation_loss = j.at("final_validation_loss").get<double>();
                log.summary = s;
            } else {
                fail(path, line_no, "unknown record type '" + type + "'");
            }
        } catch (const json::exception& e) {
            fail(path, line_no, e.what());
        }
    }
    if (!have_meta)
        throw std::runtime_error(path.string() + ": missing meta record");
    return log;
}

std::optional<std::string> verify_replay(const EventLog& log) {
    const auto& meta = log.meta;
    if (meta.num_arms < 1)
        return "meta has no arms";
    BanditState bandit = make_bandit(meta.num_arms, meta.gamma,
                                     mix_seed(meta.selection_seed, 0xa53),
                                     meta.epsilon);
    Rng uniform_rng(mix_seed(meta.selection_seed, 0x4a11d));
    const bool stochastic = meta.arm_mode == "sample";

    for (std::size_t i = 0; i < log.events.size(); ++i) {
        const auto& ev = log.events[i];
        const auto probs = arm_probabilities(bandit);

        int arm;
        if (meta.scheduler == "random") {
            arm = static_cast<int>(uniform_rng.below(meta.num_arms));
        } else {
            arm = select_arm(bandit, stochastic ? SelectMode::kSample : SelectMode::kArgmax);
        }
        if (arm != ev.arm)
            return "iteration " + std::to_string(ev.t) + ": replayed arm " +
                   std::to_string(arm) + " != logged arm " + std::to_string(ev.arm);
        for (std::size_t a = 0; a < probs.size(); ++a)
            if (std::abs(probs[a] - ev.probabilities[a]) > 1e-12)
                return "iteration " + std::to_string(ev.t) + ": probability mismatch";

        if (ev.batch > 0) {
            const double norm = normalize_reward(bandit, ev.raw_reward);
            if (std::abs(norm - ev.norm_reward) > 1e-12)
                return "iteration " + std::to_string(ev.t) + ": normalized reward mismatch";
            if (meta.scheduler != "random")
                update_weight(bandit, arm, norm, probs[arm]);
        }
        for (std::size_t a = 0; a < bandit.weights.size(); ++a)
            if (bandit.weights[a] != ev.weights[a])
                return "iteration " + std::to_string(ev.t) + ": weight trajectory mismatch";
    }
    return std::nullopt;
}

} // namespace dsel
