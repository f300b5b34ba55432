#pragma once

// AUC, stratified k-fold splits, grid search and the repeated cross-validation
// experiment (partitions x folds runs).

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "soauc/data.hpp"
#include "soauc/learners.hpp"
#include "soauc/rng.hpp"

namespace soauc {

struct AucResult {
    double value = 0.0;
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

/// Rank-sum AUC. Tied (positive, negative) pairs count 1/2, or 0 with strict_ties.
inline AucResult auc(std::span<const double> scores, std::span<const int> labels, bool strict_ties = false) {
    require_same_dim(scores.size(), labels.size(), "auc");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });

    AucResult r;
    double rank_sum = 0.0;  // midranks of positives
    double tie_pairs = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        std::size_t pos = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            const int y = labels[order[j]];
            if (y != 1 && y != -1) throw std::invalid_argument("auc: labels must be -1 or +1");
            if (y == 1) ++pos;
            ++j;
        }
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        rank_sum += midrank * static_cast<double>(pos);
        tie_pairs += static_cast<double>(pos) * static_cast<double>(j - i - pos);
        r.positives += pos;
        i = j;
    }
    r.negatives = scores.size() - r.positives;
    if (r.positives == 0 || r.negatives == 0) throw std::invalid_argument("auc: need both classes");
    const double np = static_cast<double>(r.positives);
    double u = rank_sum - np * (np + 1.0) / 2.0;
    if (strict_ties) u -= 0.5 * tie_pairs;
    r.value = std::clamp(u / (np * static_cast<double>(r.negatives)), 0.0, 1.0);
    return r;
}

/// O(n^2) pair loop, for reference.
inline double auc_pairwise(std::span<const double> scores, std::span<const int> labels, bool strict_ties = false) {
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != -1) continue;
            pairs += 1.0;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j] && !strict_ties) wins += 0.5;
        }
    }
    if (pairs == 0.0) throw std::invalid_argument("auc: need both classes");
    return wins / pairs;
}

inline AucResult auc(const TrainedModel& model, const Dataset& d, bool strict_ties = false) {
    const auto s = model.scores(d.instances);
    const auto y = d.labels();
    return auc(s, y, strict_ties);
}

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Each class is shuffled and dealt round-robin over the folds; the negative
/// deal starts where the positive one ended so fold sizes also differ by <= 1.
inline std::vector<Fold> stratified_kfold(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("stratified_kfold: k must be >= 2");
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
    if (pos.size() < k || neg.size() < k)
        throw std::invalid_argument("stratified_kfold: each class needs at least k members");

    std::vector<std::size_t> fold_of(labels.size());
    const auto deal = [&](const std::vector<std::size_t>& members, std::uint64_t s, std::size_t offset) {
        const auto perm = seeded_permutation(members.size(), s);
        for (std::size_t i = 0; i < perm.size(); ++i) fold_of[members[perm[i]]] = (offset + i) % k;
    };
    deal(pos, derive_seed(seed, 0), 0);
    deal(neg, derive_seed(seed, 1), pos.size() % k);

    std::vector<Fold> folds(k);
    for (std::size_t i = 0; i < labels.size(); ++i)
        for (std::size_t f = 0; f < k; ++f) (f == fold_of[i] ? folds[f].test : folds[f].train).push_back(i);
    return folds;
}

inline std::vector<Fold> stratified_kfold(const Dataset& d, std::size_t k, std::uint64_t seed) {
    const auto y = d.labels();
    return stratified_kfold(y, k, seed);
}

/// Runs body(i) for i in [0, n) on up to `threads` workers. Results must be
/// written to per-index slots; the first exception is rethrown.
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/// Powers of two 2^lo .. 2^hi with the given exponent stride.
inline std::vector<double> power_grid(int lo = -10, int hi = 10, int stride = 1) {
    std::vector<double> g;
    for (int e = lo; e <= hi; e += stride) g.push_back(std::ldexp(1.0, e));
    return g;
}

struct GridSpec {
    std::vector<double> lambdas = power_grid();
    std::vector<double> etas = power_grid();
    std::vector<double> widths = power_grid();
    std::vector<double> cs = power_grid();

    /// Every other exponent (11 values per parameter).
    static GridSpec subsampled() {
        const auto g = power_grid(-10, 10, 2);
        return {g, g, g, g};
    }
};

/// Cartesian product of the grids the algorithm reads; unused parameters keep
/// their defaults.
inline std::vector<Hyperparams> grid_candidates(const AlgorithmSettings& s, const GridSpec& g) {
    const auto pick = [](bool used, const std::vector<double>& v, double dflt) {
        if (!used) return std::vector<double>{dflt};
        if (v.empty()) throw std::invalid_argument("grid_search_cv: empty grid");
        return v;
    };
    const Hyperparams d;
    std::vector<Hyperparams> out;
    for (double l : pick(uses_lambda(s), g.lambdas, d.lambda))
        for (double e : pick(uses_eta(s), g.etas, d.eta))
            for (double w : pick(uses_width(s), g.widths, d.kernel_width))
                for (double c : pick(uses_c(s), g.cs, d.c)) out.push_back({l, e, w, c});
    return out;
}

/// Validation AUC of one candidate on one (train, validation) split.
using FoldEvaluator =
    std::function<double(const Hyperparams&, const Dataset& train, const Dataset& validation, std::uint64_t seed)>;

struct GridSearchResult {
    Hyperparams best;
    double best_score = 0.0;
    std::vector<double> mean_scores;  // per candidate, NaN when every fold failed
};

/// Picks the candidate with the highest mean validation AUC over k stratified
/// folds. Ties go to smaller lambda, then eta, then kernel width, then grid order.
/// Folds whose evaluation throws std::invalid_argument (e.g. single-class) are
/// left out of a candidate's mean.
inline GridSearchResult grid_search_cv(const Dataset& train, const std::vector<Hyperparams>& candidates,
                                       std::size_t k, std::uint64_t seed, const FoldEvaluator& evaluate,
                                       std::size_t threads = 1) {
    if (candidates.empty()) throw std::invalid_argument("grid_search_cv: empty grid");
    GridSearchResult res;
    if (candidates.size() == 1) {
        res.best = candidates.front();
        res.mean_scores = {std::nan("")};
        return res;
    }
    const auto folds = stratified_kfold(train, k, seed);
    std::vector<Dataset> tr(k), va(k);
    for (std::size_t f = 0; f < k; ++f) {
        tr[f] = train.subset(folds[f].train);
        va[f] = train.subset(folds[f].test);
    }

    const std::size_t n = candidates.size();
    std::vector<double> scores(n * k, std::nan(""));
    parallel_for(n * k, threads, [&](std::size_t job) {
        const std::size_t c = job / k, f = job % k;
        try {
            scores[job] = evaluate(candidates[c], tr[f], va[f], derive_seed(seed, 1000 + f));
        } catch (const std::invalid_argument&) {
        }
    });

    res.mean_scores.assign(n, std::nan(""));
    std::optional<std::size_t> best;
    for (std::size_t c = 0; c < n; ++c) {
        double sum = 0.0;
        std::size_t ok = 0;
        for (std::size_t f = 0; f < k; ++f)
            if (!std::isnan(scores[c * k + f])) {
                sum += scores[c * k + f];
                ++ok;
            }
        if (ok == 0) continue;
        const double m = sum / static_cast<double>(ok);
        res.mean_scores[c] = m;
        if (!best) {
            best = c;
            continue;
        }
        const auto& a = candidates[c];
        const auto& b = candidates[*best];
        const double bm = res.mean_scores[*best];
        if (m > bm || (m == bm && std::tie(a.lambda, a.eta, a.kernel_width) < std::tie(b.lambda, b.eta, b.kernel_width)))
            best = c;
    }
    if (!best) throw std::invalid_argument("grid_search_cv: every fold failed for every candidate");
    res.best = candidates[*best];
    res.best_score = res.mean_scores[*best];
    return res;
}

enum class ScaleScope { Global, TrainOnly };

struct ExperimentConfig {
    AlgorithmSettings settings;
    GridSpec grid = GridSpec::subsampled();
    /// Skip the grid search and use these values.
    std::optional<Hyperparams> fixed;
    std::size_t partitions = 4;
    std::size_t folds = 5;
    std::size_t inner_folds = 5;
    std::uint64_t seed = 1;
    bool strict_ties = false;
    ScaleScope scale_scope = ScaleScope::Global;
    /// Kernel learners train on at most this many sampled instances.
    std::size_t kernel_train_cap = 10000;
    std::size_t threads = 1;
};

struct RunResult {
    std::size_t partition = 0;
    std::uint64_t seed = 0;
    std::size_t fold = 0;
    Hyperparams hyper;
    double auc = 0.0;
    double seconds = 0.0;
};

struct ExperimentReport {
    Algorithm algorithm = Algorithm::OaucM;
    std::vector<RunResult> runs;
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation (n - 1)

    static std::pair<double, double> summarize(const std::vector<RunResult>& runs) {
        if (runs.empty()) return {0.0, 0.0};
        double m = 0.0;
        for (const auto& r : runs) m += r.auc;
        m /= static_cast<double>(runs.size());
        double ss = 0.0;
        for (const auto& r : runs) ss += (r.auc - m) * (r.auc - m);
        const double sd = runs.size() > 1 ? std::sqrt(ss / static_cast<double>(runs.size() - 1)) : 0.0;
        return {m, sd};
    }
};

/// Single shuffled pass on `train`, AUC on `test`.
inline double train_and_score(const AlgorithmSettings& s, const Hyperparams& h, const Dataset& train,
                              const Dataset& test, std::uint64_t seed, bool strict_ties = false) {
    const auto stream = shuffled_stream(train, seed);
    const auto model = train_one_pass(s, h, stream, train.dim);
    return auc(model, test, strict_ties).value;
}

/// `dataset` is binarized but unscaled; scaling follows config.scale_scope.
inline ExperimentReport run_experiment(const Dataset& dataset, const ExperimentConfig& config) {
    if (config.partitions == 0) throw std::invalid_argument("run_experiment: partitions must be >= 1");
    const Dataset data = config.scale_scope == ScaleScope::Global ? scale_features(dataset).first : dataset;
    const auto& s = config.settings;
    const auto candidates = config.fixed ? std::vector<Hyperparams>{*config.fixed} : grid_candidates(s, config.grid);
    const FoldEvaluator evaluate = [&](const Hyperparams& h, const Dataset& tr, const Dataset& va, std::uint64_t sd) {
        return train_and_score(s, h, tr, va, sd, config.strict_ties);
    };

    const std::size_t n_runs = config.partitions * config.folds;
    std::vector<RunResult> runs(n_runs);
    parallel_for(n_runs, config.threads, [&](std::size_t job) {
        const auto start = std::chrono::steady_clock::now();
        const std::size_t p = job / config.folds, f = job % config.folds;
        const std::uint64_t pseed = derive_seed(config.seed, p);
        const auto folds = stratified_kfold(data, config.folds, pseed);

        Dataset train = data.subset(folds[f].train);
        Dataset test = data.subset(folds[f].test);
        if (config.scale_scope == ScaleScope::TrainOnly) {
            auto [scaled, params] = scale_features(train);
            train = std::move(scaled);
            test = apply_scaling(test, params);
        }
        if (is_kernel(s.algorithm) && train.instances.size() > config.kernel_train_cap) {
            auto idx = seeded_permutation(train.instances.size(), derive_seed(pseed, 300 + f));
            idx.resize(config.kernel_train_cap);
            std::sort(idx.begin(), idx.end());
            train = train.subset(idx);
        }

        const auto best =
            grid_search_cv(train, candidates, config.inner_folds, derive_seed(pseed, 100 + f), evaluate).best;
        RunResult r;
        r.partition = p;
        r.seed = pseed;
        r.fold = f;
        r.hyper = best;
        r.auc = train_and_score(s, best, train, test, derive_seed(pseed, 200 + f), config.strict_ties);
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        runs[job] = r;
    });

    ExperimentReport rep;
    rep.algorithm = s.algorithm;
    rep.runs = std::move(runs);
    std::tie(rep.mean, rep.stddev) = ExperimentReport::summarize(rep.runs);
    return rep;
}

inline std::string report_csv(const ExperimentReport& rep) {
    std::string out = "kind,seed,fold,lambda,eta,kernel_width,c,auc,seconds,mean,stddev\n";
    for (const auto& r : rep.runs) {
        out += "run," + std::to_string(r.seed) + "," + std::to_string(r.fold) + "," + format_double(r.hyper.lambda) +
               "," + format_double(r.hyper.eta) + "," + format_double(r.hyper.kernel_width) + "," +
               format_double(r.hyper.c) + "," + format_double(r.auc) + "," + format_double(r.seconds) + ",,\n";
    }
    out += "summary,,,,,,,,," + format_double(rep.mean) + "," + format_double(rep.stddev) + "\n";
    return out;
}

/// Writes to a sibling temp file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << contents;
        out.flush();
        if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace soauc
