#pragma once

// Regret traces: run a learner over a materialized stream, then compute the best
// fixed predictor in hindsight by full-batch gradient descent on the summed
// round objectives (strongly convex for lambda > 0).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "soauc/core.hpp"
#include "soauc/data.hpp"
#include "soauc/kernel_learner.hpp"
#include "soauc/linear_learner.hpp"
#include "soauc/surrogate.hpp"

namespace soauc {

struct SolverOptions {
    double gradient_tolerance = 1e-8;
    std::size_t max_iterations = 100000;
    /// Also stop once the objective has not moved by more than
    /// stall_tolerance * max(1, |F|) for stall_window consecutive iterations.
    double stall_tolerance = 1e-14;
    std::size_t stall_window = 50;
    /// Also stop once strong convexity certifies F - F* <= ||G||^2 / (2 m)
    /// <= gap_tolerance * max(1, |F|), m being the modulus passed to minimize().
    double gap_tolerance = 1e-12;
};

struct SolverStats {
    std::size_t iterations = 0;
    double gradient_norm = 0.0;
    bool converged = false;  // gradient or gap tolerance reached
};

namespace detail {

/// Gradient descent with Barzilai-Borwein trial steps and Armijo backtracking.
/// `eval(x, grad)` returns F(x) and writes the gradient representer G (so that
/// dF(x)[d] = <G, d>_M); `metric(v)` returns M v.
template <class Eval, class Metric>
SolverStats minimize(std::vector<double>& x, Eval&& eval, Metric&& metric, const SolverOptions& opt,
                     double modulus, double& f_out) {
    const std::size_t n = x.size();
    SolverStats st;
    auto inner = [n](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
        return s;
    };
    std::vector<double> g(n), mg, x_new(n), g_new(n);
    double f = eval(x, g);
    double step = 1.0;
    std::size_t stall = 0;
    for (; st.iterations < opt.max_iterations; ++st.iterations) {
        mg = metric(g);
        const double gnorm2 = std::max(0.0, inner(g, mg));
        st.gradient_norm = std::sqrt(gnorm2);
        if (st.gradient_norm <= opt.gradient_tolerance ||
            (modulus > 0.0 && gnorm2 / (2.0 * modulus) <= opt.gap_tolerance * std::max(1.0, std::abs(f)))) {
            st.converged = true;
            break;
        }
        double f_new = f;
        bool accepted = false;
        for (int bt = 0; bt < 80; ++bt) {
            for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] - step * g[i];
            f_new = eval(x_new, g_new);
            if (f_new <= f - 1e-4 * step * gnorm2) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        // Barzilai-Borwein step for the next iteration.
        std::vector<double> dx(n), dg(n);
        for (std::size_t i = 0; i < n; ++i) {
            dx[i] = x_new[i] - x[i];
            dg[i] = g_new[i] - g[i];
        }
        const auto mdx = metric(dx);
        const double sy = inner(dg, mdx);
        const double ss = inner(dx, mdx);
        step = sy > 0.0 ? ss / sy : step * 2.0;

        stall = std::abs(f - f_new) <= opt.stall_tolerance * std::max(1.0, std::abs(f)) ? stall + 1 : 0;
        x.swap(x_new);
        g.swap(g_new);
        f = f_new;
        if (stall >= opt.stall_window) break;
    }
    f_out = f;
    return st;
}

}  // namespace detail

/// Regret bound of the linear hinge learner with eta_t = 1/(lambda t), ||x|| <= 1.
inline double linear_regret_bound(std::size_t rounds, double lambda) {
    return 18.0 * (1.0 + std::log(static_cast<double>(rounds))) / lambda;
}

/// Regret bound of the kernel hinge learner with unbounded buffers, k(x, x) <= 1.
inline double kernel_regret_bound(std::size_t rounds, double lambda) {
    const double c = 2.0 * std::sqrt(2.0) + 1.0;
    return c * c / (2.0 * lambda) * (1.0 + std::log(static_cast<double>(rounds)));
}

/// ||f_t||_H bound of the kernel hinge learner with eta_t = 1/(lambda t).
inline double kernel_norm_bound(double lambda) { return (std::sqrt(2.0) + 0.5) / lambda; }

/// ||w_t|| bound of the linear hinge learner with eta_t = 1/(lambda t), ||x|| <= 1.
inline double linear_norm_bound(double lambda) { return 3.0 / lambda; }

struct RegretTrace {
    /// Regularized loss of each gradient round, in stream order.
    std::vector<double> round_losses;
    /// 1-based stream position of each loss round.
    std::vector<std::size_t> round_positions;
    /// min over fixed predictors of the summed round objectives (whole stream).
    double batch_optimum_loss = 0.0;
    /// Per loss round r: sum of the first r round losses minus the hindsight
    /// optimum over the same r rounds. Filled only when requested.
    std::vector<double> cumulative_regret;
    SolverStats solver;

    double total_regret() const {
        double s = 0.0;
        for (double l : round_losses) s += l;
        return s - batch_optimum_loss;
    }
};

/// Hindsight objective of a linear learner: rounds r = 1..R with
/// L_r(w) = 1/2 lambda ||w||^2 + psi(w^T d_r, w^T Sigma_r w), d_r = y_r (x_r - xbar_r).
class LinearHindsight {
public:
    LinearHindsight(std::size_t p, LossKind loss, double lambda) : p_(p), loss_(loss), lambda_(lambda) {}

    void add_round(Vector d, SymMatrix cov) {
        d_.push_back(std::move(d));
        cov_.push_back(std::move(cov));
    }
    std::size_t rounds() const noexcept { return d_.size(); }

    double objective(const Vector& w, std::size_t count) const {
        double f = 0.5 * lambda_ * squared_norm(w) * static_cast<double>(count);
        for (std::size_t r = 0; r < count; ++r) f += surrogate_value(loss_, dot(w, d_[r]), quad_form(cov_[r], w));
        return f;
    }

    double eval(const std::vector<double>& w, std::vector<double>& grad, std::size_t count) const {
        const std::size_t p = p_;
        const double lam = lambda_ * static_cast<double>(count);
        double wsq = 0.0;
        for (std::size_t i = 0; i < p; ++i) wsq += w[i] * w[i];
        double f = 0.5 * lam * wsq;
        grad.resize(p);
        for (std::size_t i = 0; i < p; ++i) grad[i] = lam * w[i];
        std::vector<double> sw(p);
        for (std::size_t r = 0; r < count; ++r) {
            const double* d = d_[r].raw().data();
            const double* cov = cov_[r].values().data();
            double mu = 0.0, sigma2 = 0.0;
            for (std::size_t i = 0; i < p; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < p; ++j) acc += cov[i * p + j] * w[j];
                sw[i] = acc;
                mu += w[i] * d[i];
                sigma2 += w[i] * acc;
            }
            sigma2 = std::max(0.0, sigma2);
            const double b = 1.0 - mu;
            f += surrogate_value(loss_, mu, sigma2);
            double cd = 0.0, cs = 0.0;  // gradient = cd * d + cs * Sigma w
            if (loss_ == LossKind::SquareSecondOrder) {
                cd = -b;
                cs = 1.0;
            } else if (sigma2 <= kSigmaEps) {
                cd = b > 0.0 ? -1.0 : 0.0;
            } else {
                const double sigma = std::sqrt(sigma2);
                const double v = b / sigma;
                cd = -cap_phi_m(v);
                cs = low_phi_m(v) / sigma;
            }
            for (std::size_t i = 0; i < p; ++i) grad[i] += cd * d[i] + cs * sw[i];
        }
        return f;
    }

    /// Minimizes the first `count` rounds starting from (and overwriting) w.
    SolverStats solve(std::size_t count, Vector& w, double& optimum, const SolverOptions& opt = {}) const {
        std::vector<double> x = w.raw();
        auto st = detail::minimize(
            x, [&](const std::vector<double>& a, std::vector<double>& g) { return eval(a, g, count); },
            [](const std::vector<double>& v) { return v; }, opt, lambda_ * static_cast<double>(count), optimum);
        w = Vector(std::move(x));
        return st;
    }

    std::size_t dim() const noexcept { return p_; }

private:
    std::size_t p_;
    LossKind loss_;
    double lambda_;
    std::vector<Vector> d_;
    std::vector<SymMatrix> cov_;
};

struct RegretOptions {
    bool every_round = false;
    SolverOptions solver;
};

inline RegretTrace regret_trace(std::span<const LabeledInstance> stream, const LinearConfig& config,
                                const RegretOptions& opt = {}) {
    if (stream.empty()) throw std::invalid_argument("regret_trace: empty stream");
    const std::size_t p = stream.front().x.size();
    LinearModel model(p, config);
    LinearHindsight hindsight(p, config.loss, config.lambda);
    RegretTrace trace;

    for (std::size_t t = 0; t < stream.size(); ++t) {
        const auto& z = stream[t];
        const auto loss = model.step(z);
        if (!loss) continue;
        // step() leaves the opposite-class moments untouched.
        const ClassMoments& opp = z.y == 1 ? model.negative_moments() : model.positive_moments();
        hindsight.add_round(static_cast<double>(z.y) * (z.x - opp.mean()), opp.cov());
        trace.round_losses.push_back(*loss);
        trace.round_positions.push_back(t + 1);
    }

    Vector w(p);
    if (opt.every_round) {
        double cum = 0.0;
        for (std::size_t r = 1; r <= hindsight.rounds(); ++r) {
            double opt_r = 0.0;
            trace.solver = hindsight.solve(r, w, opt_r, opt.solver);
            cum += trace.round_losses[r - 1];
            trace.cumulative_regret.push_back(cum - opt_r);
            trace.batch_optimum_loss = opt_r;
        }
    } else if (hindsight.rounds() > 0) {
        trace.solver = hindsight.solve(hindsight.rounds(), w, trace.batch_optimum_loss, opt.solver);
    }
    return trace;
}

/// Hindsight objective of the kernel learner. Predictors are
/// f = sum_j beta_j k(x_j, .) over the stream points; each loss round compares
/// its instance with the comparison set the learner used (every earlier
/// opposite-class point when buffers are unbounded).
class KernelHindsight {
public:
    struct Round {
        std::size_t position = 0;  // 0-based stream position of the instance
        std::vector<std::size_t> comparison;
    };

    KernelHindsight(std::span<const LabeledInstance> stream, const Kernel& kernel, LossKind loss, double lambda)
        : n_(stream.size()), loss_(loss), lambda_(lambda), gram_(n_ * n_), labels_(n_) {
        for (std::size_t i = 0; i < n_; ++i) {
            labels_[i] = stream[i].y;
            for (std::size_t j = 0; j <= i; ++j) {
                const double k = kernel(stream[i].x, stream[j].x);
                gram_[i * n_ + j] = k;
                gram_[j * n_ + i] = k;
            }
        }
    }

    void add_round(Round r) {
        if (r.comparison.empty()) throw std::invalid_argument("KernelHindsight: empty comparison set");
        rounds_.push_back(std::move(r));
    }
    std::size_t rounds() const noexcept { return rounds_.size(); }

    /// K beta restricted to the first `m` points.
    std::vector<double> gram_apply(const std::vector<double>& beta, std::size_t m) const {
        std::vector<double> out(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            double s = 0.0;
            const double* row = &gram_[i * n_];
            for (std::size_t j = 0; j < m; ++j) s += row[j] * beta[j];
            out[i] = s;
        }
        return out;
    }

    /// Objective of the first `count` rounds over the first `m` points, with
    /// functional gradient coefficients in `grad` (dF[d] = grad^T K d).
    double eval(const std::vector<double>& beta, std::vector<double>& grad, std::size_t count, std::size_t m) const {
        const auto f = gram_apply(beta, m);
        grad.assign(m, 0.0);
        double surrogate_sum = 0.0;
        for (std::size_t r = 0; r < count; ++r) {
            const auto& rd = rounds_[r];
            const double n = static_cast<double>(rd.comparison.size());
            double mu = 0.0;
            for (auto i : rd.comparison) mu += f[i];
            mu /= n;
            double sigma2 = 0.0;
            for (auto i : rd.comparison) sigma2 += (f[i] - mu) * (f[i] - mu);
            sigma2 /= n;
            const double y = labels_[rd.position];
            const double b = 1.0 - y * (f[rd.position] - mu);
            surrogate_sum += surrogate_value(loss_, 1.0 - b, sigma2);

            double d_b = 0.0, d_s = 0.0;  // partials in b and sigma^2
            if (loss_ == LossKind::SquareSecondOrder) {
                d_b = b;
                d_s = 0.5;
            } else if (sigma2 <= kSigmaEps) {
                d_b = b > 0.0 ? 1.0 : 0.0;
            } else {
                const double root = std::sqrt(b * b + sigma2);
                d_b = 0.5 * (1.0 + b / root);
                d_s = 0.25 / root;
            }
            grad[rd.position] -= y * d_b;
            for (auto i : rd.comparison) grad[i] += (y * d_b + 2.0 * d_s * (f[i] - mu)) / n;
        }
        double reg = 0.0;
        for (std::size_t i = 0; i < m; ++i) reg += beta[i] * f[i];
        const double lam = lambda_ * static_cast<double>(count);
        for (std::size_t i = 0; i < m; ++i) grad[i] += lam * beta[i];
        return 0.5 * lam * reg + surrogate_sum;
    }

    /// Minimizes the first `count` rounds (warm start from beta, zero-padded).
    SolverStats solve(std::size_t count, std::vector<double>& beta, double& optimum,
                      const SolverOptions& opt = {}) const {
        const std::size_t m = count == 0 ? 0 : rounds_[count - 1].position + 1;
        beta.resize(std::max(beta.size(), m), 0.0);
        std::vector<double> head(beta.begin(), beta.begin() + static_cast<std::ptrdiff_t>(m));
        auto st = detail::minimize(
            head, [&](const std::vector<double>& b, std::vector<double>& g) { return eval(b, g, count, m); },
            [&](const std::vector<double>& v) { return gram_apply(v, m); }, opt, lambda_ * static_cast<double>(count),
            optimum);
        std::copy(head.begin(), head.end(), beta.begin());
        return st;
    }

    std::size_t size() const noexcept { return n_; }

private:
    std::size_t n_;
    LossKind loss_;
    double lambda_;
    std::vector<double> gram_;
    std::vector<int> labels_;
    std::vector<Round> rounds_;
};

inline bool unbounded_buffers(std::span<const LabeledInstance> stream, const KernelConfig& config) {
    const auto pos = static_cast<std::size_t>(
        std::count_if(stream.begin(), stream.end(), [](const auto& z) { return z.y == 1; }));
    return config.budget_pos >= pos && config.budget_neg >= stream.size() - pos;
}

inline RegretTrace kernel_regret_trace(std::span<const LabeledInstance> stream, const KernelConfig& config,
                                       const RegretOptions& opt = {}) {
    if (stream.empty()) throw std::invalid_argument("kernel_regret_trace: empty stream");
    KernelModel model(config);
    KernelHindsight hindsight(stream, config.kernel, config.loss, config.lambda);
    RegretTrace trace;
    for (std::size_t t = 0; t < stream.size(); ++t) {
        const auto& cmp = stream[t].y == 1 ? model.negative_buffer() : model.positive_buffer();
        KernelHindsight::Round round{t, {}};
        // Arrival indices are 1-based stream positions.
        for (const auto& e : cmp.entries()) round.comparison.push_back(e.index - 1);
        if (const auto loss = model.step(stream[t])) {
            hindsight.add_round(std::move(round));
            trace.round_losses.push_back(*loss);
            trace.round_positions.push_back(t + 1);
        }
    }

    std::vector<double> beta;
    if (opt.every_round) {
        double cum = 0.0;
        for (std::size_t r = 1; r <= hindsight.rounds(); ++r) {
            double opt_r = 0.0;
            trace.solver = hindsight.solve(r, beta, opt_r, opt.solver);
            cum += trace.round_losses[r - 1];
            trace.cumulative_regret.push_back(cum - opt_r);
            trace.batch_optimum_loss = opt_r;
        }
    } else if (hindsight.rounds() > 0) {
        trace.solver = hindsight.solve(hindsight.rounds(), beta, trace.batch_optimum_loss, opt.solver);
    }
    return trace;
}

}  // namespace soauc
