#pragma once

// Run configuration files (JSON) with schema validation. Every error names the
// offending field path; unknown keys are rejected at every level.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "soauc/data.hpp"
#include "soauc/eval.hpp"
#include "soauc/learners.hpp"
#include "soauc/synthetic.hpp"

namespace soauc {

class ConfigError : public std::invalid_argument {
public:
    ConfigError(const std::string& path, const std::string& what)
        : std::invalid_argument(path + ": " + what), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

inline constexpr const char* kDataRootEnv = "SOAUC_DATA_ROOT";

struct DatasetRef {
    std::string path;
    PositiveRule rule;
    std::optional<std::size_t> dimension;
};

enum class Generator { Gaussian, TwoMoons };

struct SyntheticRef {
    Generator generator = Generator::Gaussian;
    std::size_t n = 500;
    std::size_t dim = 5;
    std::uint64_t seed = 1;
    double positive_fraction = 0.3;
};

enum class Command { Train, Experiment, Regret };

struct RunConfig {
    std::optional<DatasetRef> dataset;
    std::optional<SyntheticRef> synthetic;
    AlgorithmSettings settings;
    std::optional<double> lambda, eta, kernel_width, c;
    bool budgets_given = false;
    std::uint64_t seed = 1;
    GridSpec grid = GridSpec::subsampled();
    bool grid_fixed = false;
    bool strict_ties = false;
    ScaleScope scale_scope = ScaleScope::Global;
    std::size_t partitions = 4;
    std::size_t folds = 5;
    std::size_t inner_folds = 5;
    std::size_t kernel_train_cap = 10000;
    std::size_t test_folds = 5;
    std::optional<std::size_t> regret_rounds;

    /// Given values, defaults elsewhere.
    Hyperparams hyperparams() const {
        Hyperparams h;
        if (lambda) h.lambda = *lambda;
        if (eta) h.eta = *eta;
        if (kernel_width) h.kernel_width = *kernel_width;
        if (c) h.c = *c;
        return h;
    }

    ExperimentConfig experiment() const {
        ExperimentConfig e;
        e.settings = settings;
        e.grid = grid;
        if (grid_fixed) e.fixed = hyperparams();
        e.partitions = partitions;
        e.folds = folds;
        e.inner_folds = inner_folds;
        e.seed = seed;
        e.strict_ties = strict_ties;
        e.scale_scope = scale_scope;
        e.kernel_train_cap = kernel_train_cap;
        return e;
    }
};

namespace config_detail {

using nlohmann::json;

inline std::string join(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

inline void only_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : obj.items())
        if (!ok.count(k)) throw ConfigError(join(path, k), "unknown key");
}

inline double number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    return j.get<double>();
}

inline double positive(const json& j, const std::string& path) {
    const double v = number(j, path);
    if (!(v > 0.0)) throw ConfigError(path, "must be > 0");
    return v;
}

inline std::size_t count(const json& j, const std::string& path, std::size_t min = 0) {
    if (!j.is_number_integer() || j.get<std::int64_t>() < static_cast<std::int64_t>(min))
        throw ConfigError(path, "expected an integer >= " + std::to_string(min));
    return j.get<std::size_t>();
}

inline bool boolean(const json& j, const std::string& path) {
    if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
    return j.get<bool>();
}

inline std::string text(const json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path, "expected a string");
    return j.get<std::string>();
}

inline std::set<double> label_set(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a nonempty array of labels");
    std::set<double> s;
    for (std::size_t i = 0; i < j.size(); ++i) s.insert(number(j[i], path + "[" + std::to_string(i) + "]"));
    return s;
}

inline std::vector<double> exponent_grid(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a nonempty array of integer exponents");
    std::vector<double> g;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number_integer()) throw ConfigError(path + "[" + std::to_string(i) + "]", "expected an integer");
        g.push_back(std::ldexp(1.0, j[i].get<int>()));
    }
    return g;
}

}  // namespace config_detail

inline RunConfig parse_run_config(const nlohmann::json& root) {
    using namespace config_detail;
    only_keys(root, "", {"dataset", "synthetic", "algorithm", "hyperparameters", "seed", "grid", "flags", "protocol",
                         "regret"});
    RunConfig cfg;

    if (root.contains("dataset")) {
        const auto& d = root["dataset"];
        only_keys(d, "dataset", {"path", "positive", "group", "dimension"});
        DatasetRef ref;
        if (!d.contains("path")) throw ConfigError("dataset.path", "required");
        ref.path = text(d["path"], "dataset.path");
        ref.rule = PositiveRule::auto_minority();
        if (d.contains("positive")) {
            const auto& p = d["positive"];
            if (p.is_string()) {
                if (p.get<std::string>() != "auto-minority")
                    throw ConfigError("dataset.positive", "expected \"auto-minority\" or an array of labels");
            } else {
                ref.rule = PositiveRule::explicit_set(label_set(p, "dataset.positive"));
            }
        }
        if (d.contains("group")) {
            if (ref.rule.mode != PositiveRule::Mode::AutoMinority)
                throw ConfigError("dataset.group", "only valid with \"positive\": \"auto-minority\"");
            ref.rule.labels = label_set(d["group"], "dataset.group");
        }
        if (d.contains("dimension")) ref.dimension = count(d["dimension"], "dataset.dimension", 1);
        cfg.dataset = std::move(ref);
    }

    if (root.contains("synthetic")) {
        const auto& s = root["synthetic"];
        only_keys(s, "synthetic", {"generator", "n", "dim", "seed", "positive_fraction"});
        SyntheticRef ref;
        if (s.contains("generator")) {
            const auto g = text(s["generator"], "synthetic.generator");
            if (g == "gaussian") ref.generator = Generator::Gaussian;
            else if (g == "two-moons") ref.generator = Generator::TwoMoons;
            else throw ConfigError("synthetic.generator", "expected \"gaussian\" or \"two-moons\"");
        }
        if (s.contains("n")) ref.n = count(s["n"], "synthetic.n", 1);
        if (s.contains("dim")) ref.dim = count(s["dim"], "synthetic.dim", 1);
        if (s.contains("seed")) ref.seed = count(s["seed"], "synthetic.seed");
        if (s.contains("positive_fraction")) {
            ref.positive_fraction = number(s["positive_fraction"], "synthetic.positive_fraction");
            if (!(ref.positive_fraction > 0.0 && ref.positive_fraction < 1.0))
                throw ConfigError("synthetic.positive_fraction", "must be in (0, 1)");
        }
        cfg.synthetic = ref;
    }
    if (cfg.dataset && cfg.synthetic) throw ConfigError("synthetic", "give either dataset or synthetic, not both");

    if (!root.contains("algorithm")) throw ConfigError("algorithm", "required");
    try {
        cfg.settings.algorithm = parse_algorithm(text(root["algorithm"], "algorithm"));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError("algorithm", e.what());
    }

    if (root.contains("hyperparameters")) {
        const auto& h = root["hyperparameters"];
        const std::string p = "hyperparameters";
        only_keys(h, p, {"lambda", "eta", "kernel_width", "c", "schedule", "l_star", "horizon", "budget_pos",
                         "budget_neg"});
        if (h.contains("lambda")) cfg.lambda = positive(h["lambda"], p + ".lambda");
        if (h.contains("eta")) cfg.eta = positive(h["eta"], p + ".eta");
        if (h.contains("kernel_width")) cfg.kernel_width = positive(h["kernel_width"], p + ".kernel_width");
        if (h.contains("c")) cfg.c = positive(h["c"], p + ".c");
        if (h.contains("schedule")) {
            try {
                cfg.settings.schedule = parse_schedule_choice(text(h["schedule"], p + ".schedule"));
            } catch (const ConfigError&) {
                throw;
            } catch (const std::invalid_argument& e) {
                throw ConfigError(p + ".schedule", e.what());
            }
        }
        if (h.contains("l_star")) {
            cfg.settings.l_star = number(h["l_star"], p + ".l_star");
            if (cfg.settings.l_star < 0.0) throw ConfigError(p + ".l_star", "must be >= 0");
        }
        if (h.contains("horizon")) cfg.settings.horizon = count(h["horizon"], p + ".horizon", 1);
        if (h.contains("budget_pos")) cfg.settings.budget_pos = count(h["budget_pos"], p + ".budget_pos", 1);
        if (h.contains("budget_neg")) cfg.settings.budget_neg = count(h["budget_neg"], p + ".budget_neg", 1);
        cfg.budgets_given = h.contains("budget_pos") || h.contains("budget_neg");
        if (cfg.settings.schedule == ScheduleChoice::HorizonTuned && !h.contains("horizon"))
            throw ConfigError(p + ".horizon", "required for the horizon-tuned schedule");
    }

    if (root.contains("seed")) cfg.seed = count(root["seed"], "seed");

    if (root.contains("grid")) {
        const auto& g = root["grid"];
        only_keys(g, "grid", {"mode", "lambda", "eta", "kernel_width", "c"});
        if (g.contains("mode")) {
            const auto m = text(g["mode"], "grid.mode");
            if (m == "full") cfg.grid = GridSpec{};
            else if (m == "subsampled") cfg.grid = GridSpec::subsampled();
            else if (m == "fixed") cfg.grid_fixed = true;
            else throw ConfigError("grid.mode", "expected \"full\", \"subsampled\" or \"fixed\"");
        }
        if (g.contains("lambda")) cfg.grid.lambdas = exponent_grid(g["lambda"], "grid.lambda");
        if (g.contains("eta")) cfg.grid.etas = exponent_grid(g["eta"], "grid.eta");
        if (g.contains("kernel_width")) cfg.grid.widths = exponent_grid(g["kernel_width"], "grid.kernel_width");
        if (g.contains("c")) cfg.grid.cs = exponent_grid(g["c"], "grid.c");
    }

    if (root.contains("flags")) {
        const auto& f = root["flags"];
        only_keys(f, "flags", {"strict_paper_init", "eviction_rule", "strict_ties", "scale_scope"});
        if (f.contains("strict_paper_init"))
            cfg.settings.step_with_empty_history = boolean(f["strict_paper_init"], "flags.strict_paper_init");
        if (f.contains("eviction_rule")) {
            const auto e = text(f["eviction_rule"], "flags.eviction_rule");
            if (e == "min_residual") cfg.settings.eviction = EvictionRule::MinResidual;
            else if (e == "paper_literal") cfg.settings.eviction = EvictionRule::MinAbsKernel;
            else throw ConfigError("flags.eviction_rule", "expected \"min_residual\" or \"paper_literal\"");
        }
        if (f.contains("strict_ties")) cfg.strict_ties = boolean(f["strict_ties"], "flags.strict_ties");
        if (f.contains("scale_scope")) {
            const auto s = text(f["scale_scope"], "flags.scale_scope");
            if (s == "global") cfg.scale_scope = ScaleScope::Global;
            else if (s == "train_only") cfg.scale_scope = ScaleScope::TrainOnly;
            else throw ConfigError("flags.scale_scope", "expected \"global\" or \"train_only\"");
        }
    }

    if (root.contains("protocol")) {
        const auto& p = root["protocol"];
        only_keys(p, "protocol", {"partitions", "folds", "inner_folds", "kernel_train_cap", "test_folds"});
        if (p.contains("partitions")) cfg.partitions = count(p["partitions"], "protocol.partitions", 1);
        if (p.contains("folds")) cfg.folds = count(p["folds"], "protocol.folds", 2);
        if (p.contains("inner_folds")) cfg.inner_folds = count(p["inner_folds"], "protocol.inner_folds", 2);
        if (p.contains("kernel_train_cap"))
            cfg.kernel_train_cap = count(p["kernel_train_cap"], "protocol.kernel_train_cap", 1);
        if (p.contains("test_folds")) cfg.test_folds = count(p["test_folds"], "protocol.test_folds", 2);
    }

    if (root.contains("regret")) {
        const auto& r = root["regret"];
        only_keys(r, "regret", {"rounds"});
        if (r.contains("rounds")) cfg.regret_rounds = count(r["rounds"], "regret.rounds", 1);
    }
    return cfg;
}

/// Checks that the parameters `cmd` needs are present.
inline void validate_for(const RunConfig& cfg, Command cmd) {
    const auto& s = cfg.settings;
    if (!cfg.dataset && !cfg.synthetic) throw ConfigError("dataset", "required (or give synthetic)");
    if (cmd == Command::Experiment && !cfg.dataset) throw ConfigError("dataset", "required for experiment");
    const bool needs_values = cmd != Command::Experiment || cfg.grid_fixed;
    if (!needs_values) return;
    const std::string algo = to_string(s.algorithm);
    if (cmd == Command::Regret && is_baseline(s.algorithm))
        throw ConfigError("algorithm", "regret traces need a surrogate-loss learner, got " + algo);
    if (uses_lambda(s) && !cfg.lambda) throw ConfigError("hyperparameters.lambda", "required for " + algo);
    if (uses_eta(s) && !cfg.eta) throw ConfigError("hyperparameters.eta", "required for " + algo);
    if (uses_width(s) && !cfg.kernel_width) throw ConfigError("hyperparameters.kernel_width", "required for " + algo);
    if (uses_c(s) && !cfg.c) throw ConfigError("hyperparameters.c", "required for " + algo);
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path.string() + "'");
    nlohmann::json root;
    try {
        in >> root;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
    }
    return parse_run_config(root);
}

/// Relative dataset paths are looked up under $SOAUC_DATA_ROOT when it is set.
inline std::filesystem::path resolve_dataset_path(const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_relative()) {
        if (const char* root = std::getenv(kDataRootEnv); root && *root) return std::filesystem::path(root) / p;
    }
    return p;
}

/// Loads and binarizes the configured dataset (unscaled), or generates the
/// synthetic one.
inline Dataset load_dataset(const RunConfig& cfg) {
    if (cfg.synthetic) {
        const auto& s = *cfg.synthetic;
        return to_dataset(s.generator == Generator::Gaussian
                              ? gaussian_unit_ball_stream(s.n, s.dim, s.seed, s.positive_fraction)
                              : two_moons(s.n, s.seed, 0.1, s.positive_fraction));
    }
    if (!cfg.dataset) throw ConfigError("dataset", "required");
    const auto raw = load_libsvm(resolve_dataset_path(cfg.dataset->path).string(), cfg.dataset->dimension);
    return binarize(raw, cfg.dataset->rule);
}

}  // namespace soauc
