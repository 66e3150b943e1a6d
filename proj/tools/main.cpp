#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsel/clustering.hpp"
#include "dsel/dataset.hpp"
#include "dsel/engine.hpp"
#include "dsel/event_log.hpp"
#include "dsel/generator.hpp"
#include "dsel/numfmt.hpp"
#include "dsel/oracle.hpp"
#include "dsel/planner.hpp"
#include "dsel/trainer.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomainError = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitVerifyFailure = 3;

bool verbose() {
    const char* v = std::getenv("DSEL_VERBOSE");
    return v != nullptr && std::string(v) != "0";
}

void info(const std::string& msg) {
    if (verbose())
        std::cerr << "[dsel] " << msg << '\n';
}

std::vector<std::int64_t> parse_sizes(const std::string& csv) {
    std::vector<std::int64_t> sizes;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        sizes.push_back(dsel::parse_int(item));
    if (sizes.empty())
        throw CLI::ValidationError("--sizes", "expected a comma-separated list");
    return sizes;
}

struct ClusteringFlags {
    double bin_width = 0.1;
    int num_bins = 10;
    int task_clusters = 4;
    int kmeans_iters = 50;
    std::uint64_t seed = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--bin-width", bin_width, "difficulty bin width")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--num-bins", num_bins, "number of difficulty bins before overflow clamp")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--tasks", task_clusters, "task clusters per difficulty bin")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--kmeans-iters", kmeans_iters, "k-means iteration cap")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--cluster-seed", seed, "k-means seeding")->capture_default_str();
    }

    dsel::PartitionOptions options() const {
        dsel::PartitionOptions o;
        o.bin_width = bin_width;
        o.num_bins = num_bins;
        o.task_clusters = task_clusters;
        o.kmeans_max_iters = kmeans_iters;
        o.seed = seed;
        return o;
    }
};

int cmd_gen(const std::string& out, const std::string& sizes_csv, std::size_t dim,
            std::uint64_t seed, double bin_width, double sigma, double radius,
            double noise_radius, int informative, std::int64_t validation) {
    dsel::GenOptions opts;
    opts.cluster_sizes = parse_sizes(sizes_csv);
    opts.dim = dim;
    opts.seed = seed;
    opts.bin_width = bin_width;
    opts.sigma = sigma;
    opts.radius = radius;
    opts.noise_radius = noise_radius;
    opts.informative_cluster = informative;
    opts.validation_per_cluster = validation;

    const auto planted = dsel::generate_planted(opts);
    dsel::write_dataset(out, planted.dataset);
    dsel::write_labels(out + ".labels.csv", planted.dataset, planted.labels);
    if (!planted.validation_features.empty()) {
        dsel::Dataset val;
        val.embedding_dim = opts.dim;
        for (std::size_t i = 0; i < planted.validation_features.size(); ++i) {
            dsel::SampleRecord s;
            s.id = static_cast<dsel::SampleId>(i);
            s.embedding = planted.validation_features[i];
            val.samples.push_back(std::move(s));
        }
        dsel::write_dataset(out + ".val.csv", val);
        dsel::write_labels(out + ".val.csv.labels.csv", val, planted.validation_labels);
    }
    std::cout << "wrote " << planted.dataset.samples.size() << " samples to " << out << '\n';
    return kExitOk;
}

int cmd_cluster(const std::string& data_path, const ClusteringFlags& flags) {
    auto data = dsel::read_dataset(data_path);
    auto clusters = dsel::partition_dataset(data.samples, flags.options());

    std::vector<std::int64_t> sizes;
    for (const auto& c : clusters)
        sizes.push_back(static_cast<std::int64_t>(c.size()));
    const auto stats = dsel::cluster_stats(sizes);

    std::cout << "difficulty clusters: " << clusters.size() << '\n';
    for (const auto& c : clusters) {
        std::cout << "  [" << c.index << "] ifd=[" << dsel::format_double(c.ifd_lo) << ", "
                  << dsel::format_double(c.ifd_hi) << ") size=" << c.size() << " tasks=";
        for (std::size_t i = 0; i < c.task_clusters.size(); ++i)
            std::cout << (i ? "/" : "") << c.task_clusters[i].member_ids.size();
        std::cout << '\n';
    }
    std::cout << "mean_size = " << dsel::format_double(stats.mean_size) << '\n';
    std::cout << "cv_squared = " << dsel::format_double(stats.cv_squared) << '\n';
    return kExitOk;
}

int cmd_plan(std::int64_t budget, double alpha, double gamma,
             const std::string& sizes_csv, const std::string& data_path,
             const ClusteringFlags& flags, std::optional<std::int64_t> steps_override,
             const std::string& out_path) {
    std::vector<std::int64_t> sizes;
    std::string provenance;
    if (!sizes_csv.empty()) {
        sizes = parse_sizes(sizes_csv);
        provenance = "cluster sizes given directly: " + sizes_csv;
    } else {
        auto data = dsel::read_dataset(data_path);
        auto clusters = dsel::partition_dataset(data.samples, flags.options());
        for (const auto& c : clusters)
            sizes.push_back(static_cast<std::int64_t>(c.size()));
        provenance = "cluster sizes derived from " + data_path;
    }

    const auto stats = dsel::cluster_stats(sizes);
    const double n0 = alpha * stats.mean_size;
    const auto t_min = dsel::min_steps(static_cast<double>(budget), n0, stats.cv_squared);
    if (steps_override && *steps_override < t_min) {
        // reject overrides whose raw coefficient is negative; smaller-but-valid
        // overrides are clamped up to T_min by make_plan
        try {
            dsel::optimal_b(static_cast<double>(budget), n0,
                            static_cast<double>(*steps_override), stats.cv_squared);
        } catch (const dsel::InfeasiblePlanError& e) {
            std::cerr << "infeasible steps override " << *steps_override
                      << ": raw b = " << dsel::format_double(e.raw_b()) << " (T_min = " << t_min
                      << ")\n";
            return kExitDomainError;
        }
    }

    const auto plan = dsel::make_plan(budget, alpha, sizes, steps_override, gamma);
    std::cout << "mean_size = " << dsel::format_double(stats.mean_size) << '\n';
    std::cout << "cv_squared = " << dsel::format_double(plan.cv_squared) << '\n';
    std::cout << "n0 = " << dsel::format_double(plan.n0) << '\n';
    std::cout << "T_min = " << t_min << '\n';
    std::cout << "T = " << plan.steps << '\n';
    std::cout << "b_star = " << dsel::format_double(plan.b_star) << '\n';
    std::cout << "expected_batch = "
              << dsel::format_double(dsel::expected_batch_size(
                     plan.alpha, plan.b_star, stats.mean_size, plan.cv_squared))
              << '\n';
    if (!out_path.empty()) {
        dsel::write_plan(out_path, plan,
                         provenance + "\nmean_cluster_size = " +
                             dsel::format_double(stats.mean_size));
        info("plan written to " + out_path);
    }
    return kExitOk;
}

int cmd_run(const std::string& data_path, const std::string& plan_path,
            const std::string& trainer_kind, const std::string& labels_path,
            const std::string& val_data_path, double eta, double lambda, int classes,
            std::uint64_t trainer_seed, std::uint64_t selection_seed,
            const std::string& scheduler_name, const std::string& arm_mode_name,
            double epsilon, std::optional<double> b_override,
            const ClusteringFlags& flags, const std::string& log_path,
            int snapshot_cadence, bool record_wall_time) {
    auto data = dsel::read_dataset(data_path);
    auto clusters = dsel::partition_dataset(data.samples, flags.options());
    std::vector<std::int64_t> sizes;
    for (const auto& c : clusters)
        sizes.push_back(static_cast<std::int64_t>(c.size()));

    dsel::EngineConfig cfg;
    cfg.plan = dsel::read_plan(plan_path);
    if (b_override) {
        if (!(*b_override >= 0.0 && *b_override < 1.0))
            throw CLI::ValidationError("--b-override", "must be in [0,1)");
        cfg.plan.b_star = *b_override;
    }
    cfg.scheduler =
        scheduler_name == "random" ? dsel::Scheduler::kRandom : dsel::Scheduler::kBandit;
    cfg.arm_mode = arm_mode_name == "sample" ? dsel::SelectMode::kSample
                                             : dsel::SelectMode::kArgmax;
    cfg.selection_seed = selection_seed;
    cfg.bandit_epsilon = epsilon;
    cfg.snapshot_cadence = snapshot_cadence;
    cfg.record_wall_time = record_wall_time;

    std::unique_ptr<dsel::Trainer> trainer;
    if (trainer_kind == "quadratic") {
        trainer = std::make_unique<dsel::QuadraticTrainer>(data, lambda, eta, trainer_seed);
    } else {
        if (labels_path.empty())
            throw CLI::ValidationError("--labels", "required for the logistic trainer");
        const auto labels = dsel::read_labels(labels_path, data);
        int num_classes = classes;
        if (num_classes <= 0) {
            for (int l : labels)
                num_classes = std::max(num_classes, l + 1);
        }
        std::vector<std::vector<double>> val_features;
        std::vector<int> val_labels;
        if (!val_data_path.empty()) {
            auto val = dsel::read_dataset(val_data_path);
            const auto vl = dsel::read_labels(val_data_path + ".labels.csv", val);
            for (auto& s : val.samples)
                val_features.push_back(std::move(s.embedding));
            val_labels = vl;
        }
        trainer = std::make_unique<dsel::LogisticTrainer>(
            data, labels, num_classes, eta, trainer_seed, std::move(val_features),
            std::move(val_labels));
    }

    dsel::EventLogWriter writer(log_path);
    dsel::RunMeta meta;
    meta.scheduler = scheduler_name;
    meta.arm_mode = arm_mode_name;
    meta.selection_seed = selection_seed;
    meta.trainer_seed = trainer_seed;
    meta.budget = cfg.plan.budget;
    meta.steps = cfg.plan.steps;
    meta.alpha = cfg.plan.alpha;
    meta.b = cfg.plan.b_star;
    meta.gamma = cfg.plan.gamma;
    meta.epsilon = epsilon;
    meta.num_arms = static_cast<int>(clusters.size());
    meta.cluster_sizes = sizes;
    meta.trainer = trainer_kind;
    meta.snapshot_cadence = snapshot_cadence;
    meta.record_wall_time = record_wall_time;
    writer.write_meta(meta);

    dsel::Engine engine(data, std::move(clusters), *trainer, cfg, &writer);
    const auto summary = engine.run();

    std::cout << "iterations = " << summary.iterations << '\n';
    std::cout << "total_selected = " << summary.total_selected << '\n';
    std::cout << "pull_counts =";
    for (auto c : summary.pull_counts)
        std::cout << ' ' << c;
    std::cout << '\n';
    std::cout << "cumulative_utility_drop = "
              << dsel::format_double(summary.cumulative_utility_drop) << '\n';
    if (summary.final_validation_loss)
        std::cout << "final_validation_loss = "
                  << dsel::format_double(*summary.final_validation_loss) << '\n';
    return kExitOk;
}

int cmd_verify(std::uint64_t seed) {
    const auto reports = dsel::run_all_checks(seed);
    bool all_pass = true;
    for (const auto& rep : reports) {
        std::cout << rep.to_line() << '\n';
        all_pass = all_pass && rep.pass;
    }
    return all_pass ? kExitOk : kExitVerifyFailure;
}

int cmd_report(const std::string& log_path, const std::string& out_path) {
    const auto log = dsel::read_event_log(log_path);
    std::ostringstream table;
    table << "t,arm,batch,budget_left,beta_star,predicted_delta,utility_before,"
             "utility_after,raw_reward,norm_reward,weights,probabilities,wall_time_ms\n";
    auto join = [](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i)
                s += ';';
            s += dsel::format_double(v[i]);
        }
        return s;
    };
    for (const auto& ev : log.events) {
        table << ev.t << ',' << ev.arm << ',' << ev.batch << ',' << ev.budget_left << ','
              << dsel::format_double(ev.beta_star) << ','
              << dsel::format_double(ev.predicted_delta) << ','
              << dsel::format_double(ev.utility_before) << ','
              << dsel::format_double(ev.utility_after) << ','
              << dsel::format_double(ev.raw_reward) << ','
              << dsel::format_double(ev.norm_reward) << ',' << join(ev.weights) << ','
              << join(ev.probabilities) << ',' << ev.wall_time_ms << '\n';
    }
    if (out_path.empty()) {
        std::cout << table.str();
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot open " + out_path + " for writing");
        out << table.str();
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"budget-constrained iterative data selection"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic planted-cluster dataset");
    std::string gen_out;
    std::string gen_sizes;
    std::size_t gen_dim = 8;
    std::uint64_t gen_seed = 0;
    double gen_bin_width = 0.1;
    double gen_sigma = 0.5;
    double gen_radius = 4.0;
    double gen_noise_radius = 1.0;
    int gen_informative = -1;
    std::int64_t gen_validation = 0;
    gen->add_option("--out", gen_out, "output dataset path")->required();
    gen->add_option("--sizes", gen_sizes, "comma-separated cluster sizes")->required();
    gen->add_option("--dim", gen_dim, "embedding dimension")->capture_default_str();
    gen->add_option("--seed", gen_seed, "generator seed")->capture_default_str();
    gen->add_option("--bin-width", gen_bin_width, "difficulty bin width")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    gen->add_option("--sigma", gen_sigma, "within-cluster feature jitter")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    gen->add_option("--radius", gen_radius, "informative cluster radius")
        ->capture_default_str();
    gen->add_option("--noise-radius", gen_noise_radius, "noise cluster radius")
        ->capture_default_str();
    gen->add_option("--informative", gen_informative,
                    "index of the single learnable cluster (-1: all clusters keep labels)")
        ->capture_default_str();
    gen->add_option("--validation", gen_validation,
                    "validation rows drawn from the informative cluster")
        ->capture_default_str();

    // cluster
    auto* cluster = app.add_subcommand("cluster", "partition a dataset and print statistics");
    std::string cluster_data;
    ClusteringFlags cluster_flags;
    cluster->add_option("--data", cluster_data, "dataset path")->required();
    cluster_flags.attach(cluster);

    // plan
    auto* plan = app.add_subcommand("plan", "derive the budget schedule");
    std::int64_t plan_budget = 0;
    double plan_alpha = 0.015;
    double plan_gamma = 0.05;
    std::string plan_sizes;
    std::string plan_data;
    std::int64_t plan_steps = -1;
    std::string plan_out;
    ClusteringFlags plan_flags;
    plan->add_option("--budget", plan_budget, "total sample budget B")
        ->required()
        ->check(CLI::PositiveNumber);
    plan->add_option("--alpha", plan_alpha, "per-cluster sampling rate")
        ->capture_default_str();
    plan->add_option("--gamma", plan_gamma, "exploration rate")->capture_default_str();
    auto* plan_sizes_opt =
        plan->add_option("--sizes", plan_sizes, "comma-separated cluster sizes");
    auto* plan_data_opt = plan->add_option("--data", plan_data, "derive sizes from dataset");
    plan_sizes_opt->excludes(plan_data_opt);
    plan->add_option("--steps", plan_steps, "iteration count override (>= T_min)");
    plan->add_option("--out", plan_out, "plan file to write");
    plan_flags.attach(plan);

    // run
    auto* run = app.add_subcommand("run", "execute a selection run against a trainer");
    std::string run_data;
    std::string run_plan;
    std::string run_trainer = "quadratic";
    std::string run_labels;
    std::string run_val_data;
    double run_eta = 0.1;
    double run_lambda = 1.0;
    int run_classes = 0;
    std::uint64_t run_trainer_seed = 0;
    std::uint64_t run_seed = 0;
    std::string run_scheduler = "bandit";
    std::string run_arm_mode = "argmax";
    double run_epsilon = 0.0;
    double run_b_override = -1.0;
    std::string run_log;
    int run_cadence = 0;
    bool run_wall_time = false;
    ClusteringFlags run_flags;
    run->add_option("--data", run_data, "dataset path")->required();
    run->add_option("--plan", run_plan, "plan file")->required();
    run->add_option("--trainer", run_trainer, "trainer kind")
        ->check(CLI::IsMember({"quadratic", "logistic"}))
        ->capture_default_str();
    run->add_option("--labels", run_labels, "labels sidecar (logistic)");
    run->add_option("--val-data", run_val_data, "validation dataset (logistic)");
    run->add_option("--eta", run_eta, "learning rate")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    run->add_option("--lambda", run_lambda, "quadratic curvature")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    run->add_option("--classes", run_classes, "class count (0: infer from labels)")
        ->capture_default_str();
    run->add_option("--trainer-seed", run_trainer_seed, "trainer seed")
        ->capture_default_str();
    run->add_option("--seed", run_seed, "selection seed")->capture_default_str();
    run->add_option("--scheduler", run_scheduler, "cluster scheduler")
        ->check(CLI::IsMember({"bandit", "random"}))
        ->capture_default_str();
    run->add_option("--arm-mode", run_arm_mode, "bandit arm selection")
        ->check(CLI::IsMember({"argmax", "sample"}))
        ->capture_default_str();
    run->add_option("--epsilon", run_epsilon, "additive weight share (EXP3.S when > 0)")
        ->capture_default_str();
    run->add_option("--b-override", run_b_override,
                    "smoothing coefficient override (default: plan b_star)");
    run->add_option("--log", run_log, "event log output path")->required();
    run->add_option("--snapshot-cadence", run_cadence,
                    "write a utility snapshot every N iterations (0: never)")
        ->capture_default_str();
    run->add_flag("--record-wall-time", run_wall_time,
                  "record per-iteration wall time (breaks byte-reproducibility)");
    run_flags.attach(run);

    // verify
    auto* verify = app.add_subcommand("verify", "run the brute-force verification suite");
    std::uint64_t verify_seed = 42;
    verify->add_option("--seed", verify_seed, "verification seed")->capture_default_str();

    // report
    auto* report = app.add_subcommand("report", "tabulate an event log");
    std::string report_log;
    std::string report_out;
    report->add_option("--log", report_log, "event log path")->required();
    report->add_option("--out", report_out, "output path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfigError;
    }

    try {
        if (gen->parsed())
            return cmd_gen(gen_out, gen_sizes, gen_dim, gen_seed, gen_bin_width, gen_sigma,
                           gen_radius, gen_noise_radius, gen_informative, gen_validation);
        if (cluster->parsed())
            return cmd_cluster(cluster_data, cluster_flags);
        if (plan->parsed()) {
            if (plan_sizes.empty() && plan_data.empty())
                throw CLI::ValidationError("plan", "one of --sizes or --data is required");
            return cmd_plan(plan_budget, plan_alpha, plan_gamma, plan_sizes, plan_data,
                            plan_flags,
                            plan_steps >= 0 ? std::optional<std::int64_t>(plan_steps)
                                            : std::nullopt,
                            plan_out);
        }
        if (run->parsed())
            return cmd_run(run_data, run_plan, run_trainer, run_labels, run_val_data,
                           run_eta, run_lambda, run_classes, run_trainer_seed, run_seed,
                           run_scheduler, run_arm_mode, run_epsilon,
                           run_b_override >= 0.0 ? std::optional<double>(run_b_override)
                                                 : std::nullopt,
                           run_flags, run_log, run_cadence, run_wall_time);
        if (verify->parsed())
            return cmd_verify(verify_seed);
        if (report->parsed())
            return cmd_report(report_log, report_out);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDomainError;
    }
    return kExitConfigError;
}
