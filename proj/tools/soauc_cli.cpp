// soauc: train / experiment / regret / verify from a JSON run config.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "soauc/soauc.hpp"

namespace fs = std::filesystem;
using namespace soauc;

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::size_t threads = 1;
};

RunConfig load(const Options& o, Command cmd) {
    RunConfig cfg = load_run_config(o.config);
    if (o.seed) cfg.seed = *o.seed;
    validate_for(cfg, cmd);
    return cfg;
}

int cmd_train(const Options& o) {
    const RunConfig cfg = load(o, Command::Train);
    Dataset data = load_dataset(cfg);
    if (cfg.scale_scope == ScaleScope::Global) data = scale_features(data).first;

    const auto folds = stratified_kfold(data, cfg.test_folds, derive_seed(cfg.seed, 0));
    Dataset train = data.subset(folds[0].train);
    Dataset test = data.subset(folds[0].test);
    ScalingParams params = fit_scaling(train);
    if (cfg.scale_scope == ScaleScope::TrainOnly) {
        train = apply_scaling(train, params);
        test = apply_scaling(test, params);
    }

    const Hyperparams h = cfg.hyperparams();
    const auto stream = shuffled_stream(train, derive_seed(cfg.seed, 1));
    const auto model = train_one_pass(cfg.settings, h, stream, data.dim);
    const double train_auc = auc(model, train, cfg.strict_ties).value;
    const double test_auc = auc(model, test, cfg.strict_ties).value;

    json snap{{"algorithm", to_string(cfg.settings.algorithm)}, {"seed", cfg.seed}, {"model", to_json(model)}};
    if (cfg.scale_scope == ScaleScope::TrainOnly) snap["scaling"] = params.ranges;
    const fs::path out = o.out.empty() ? fs::path("model.json") : fs::path(o.out);
    write_file_atomic(out, snap.dump(1) + "\n");

    std::cout << "algorithm=" << to_string(cfg.settings.algorithm) << " seed=" << cfg.seed
              << " train_n=" << train.instances.size() << " test_n=" << test.instances.size()
              << " train_auc=" << format_double(train_auc) << " test_auc=" << format_double(test_auc) << "\n";
    return 0;
}

int cmd_experiment(const Options& o) {
    const RunConfig cfg = load(o, Command::Experiment);
    const Dataset data = load_dataset(cfg);
    ExperimentConfig ec = cfg.experiment();
    ec.threads = o.threads;
    const auto rep = run_experiment(data, ec);
    const fs::path out = o.out.empty() ? fs::path("experiment.csv") : fs::path(o.out);
    write_file_atomic(out, report_csv(rep));
    std::cout << "algorithm=" << to_string(rep.algorithm) << " runs=" << rep.runs.size()
              << " mean_auc=" << format_double(rep.mean) << " stddev=" << format_double(rep.stddev) << "\n";
    return 0;
}

int cmd_regret(const Options& o) {
    const RunConfig cfg = load(o, Command::Regret);
    Dataset data = load_dataset(cfg);
    if (cfg.dataset) data = scale_features(data).first;
    auto stream = shuffled_stream(data, derive_seed(cfg.seed, 2));
    if (cfg.regret_rounds && *cfg.regret_rounds < stream.size()) stream.resize(*cfg.regret_rounds);

    const auto& s = cfg.settings;
    const Hyperparams h = cfg.hyperparams();
    const bool default_step = effective_schedule(s) == ScheduleChoice::InverseLambdaT;
    RegretOptions ro;
    ro.every_round = true;
    RegretTrace trace;
    std::optional<std::function<double(std::size_t)>> bound;

    if (is_kernel(s.algorithm)) {
        AlgorithmSettings ks = s;
        if (!cfg.budgets_given) ks.budget_pos = ks.budget_neg = std::max<std::size_t>(1, stream.size());
        const KernelConfig kc = make_kernel_config(ks, h);
        const bool unbounded = unbounded_buffers(stream, kc);
        if (s.algorithm == Algorithm::OkaucM && default_step) {
            if (unbounded) bound = [l = h.lambda](std::size_t r) { return kernel_regret_bound(r, l); };
            else
                std::cerr << "warning: the okauc-m regret bound covers unbounded buffers only; "
                             "bound column omitted\n";
        }
        trace = kernel_regret_trace(stream, kc, ro);
    } else {
        const LinearConfig lc = make_linear_config(s, h);
        if (s.algorithm == Algorithm::OaucM && default_step) {
            double max_norm = 0.0;
            for (const auto& z : stream) max_norm = std::max(max_norm, norm(z.x));
            if (max_norm <= 1.0 + 1e-12)  // round-off from unit-ball projection
                bound = [l = h.lambda](std::size_t r) { return linear_regret_bound(r, l); };
            else
                std::cerr << "warning: the oauc-m regret bound assumes ||x|| <= 1 (max here "
                          << format_double(max_norm) << "); bound column omitted\n";
        }
        trace = regret_trace(stream, lc, ro);
    }
    if (!bound) std::cerr << "note: no regret bound for this configuration\n";

    std::string csv = bound ? "t,cumulative_regret,bound_value\n" : "t,cumulative_regret\n";
    for (std::size_t r = 0; r < trace.cumulative_regret.size(); ++r) {
        csv += std::to_string(trace.round_positions[r]) + "," + format_double(trace.cumulative_regret[r]);
        if (bound) csv += "," + format_double((*bound)(r + 1));
        csv += "\n";
    }
    if (o.out.empty()) std::cout << csv;
    else write_file_atomic(o.out, csv);
    return 0;
}

int cmd_verify() {
    bool ok = true;
    for (const auto& r : run_all_suites()) {
        std::cout << (r.passed() ? "PASS " : "FAIL ") << r.name << " checks=" << r.checks
                  << " failures=" << r.failures;
        if (!r.passed()) std::cout << " first: " << r.first_failure;
        std::cout << "\n";
        ok = ok && r.passed();
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online AUC learning with second-order surrogate losses"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", o.config, "JSON run config");
        if (needs_config) c->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "master seed (overrides the config)");
        sub->add_option("--out", o.out, "output path");
        sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
    };
    auto* train = app.add_subcommand("train", "train one model on one shuffled pass");
    auto* experiment = app.add_subcommand("experiment", "repeated cross-validation experiment (CSV report)");
    auto* regret = app.add_subcommand("regret", "cumulative regret trace (CSV)");
    auto* verify = app.add_subcommand("verify", "run the self-check suites");
    add_common(train, true);
    add_common(experiment, true);
    add_common(regret, true);
    add_common(verify, false);

    CLI11_PARSE(app, argc, argv);
    try {
        if (train->parsed()) return cmd_train(o);
        if (experiment->parsed()) return cmd_experiment(o);
        if (regret->parsed()) return cmd_regret(o);
        if (verify->parsed()) return cmd_verify();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
