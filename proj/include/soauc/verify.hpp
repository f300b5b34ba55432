#pragma once

// Self-check suites behind `soauc verify`. Each suite draws fixed-seed random
// cases, compares the library against a direct recomputation, and reports the
// first violating input.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "soauc/core.hpp"
#include "soauc/kernel_learner.hpp"
#include "soauc/moments.hpp"
#include "soauc/regret.hpp"
#include "soauc/surrogate.hpp"
#include "soauc/synthetic.hpp"

namespace soauc {

struct SuiteResult {
    std::string name;
    std::size_t checks = 0;
    std::size_t failures = 0;
    std::string first_failure;

    bool passed() const noexcept { return checks > 0 && failures == 0; }

    void check(bool ok, const std::function<std::string()>& describe) {
        ++checks;
        if (ok) return;
        if (failures++ == 0) first_failure = describe();
    }
};

namespace verify_detail {

inline Vector random_vector(Rng& rng, std::size_t p, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    Vector v(p);
    for (auto& x : v) x = n(rng);
    return v;
}

inline Vector random_in_ball(Rng& rng, std::size_t p) {
    Vector v = random_vector(rng, p);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = std::pow(u(rng), 1.0 / static_cast<double>(p));
    const double nv = norm(v);
    if (nv > 0.0) v *= r / nv;
    return v;
}

/// Mean and population covariance by the two-pass textbook formula.
inline void direct_moments(const std::vector<Vector>& pts, Vector& mean, std::vector<double>& cov) {
    const std::size_t p = pts.front().size();
    const double n = static_cast<double>(pts.size());
    mean = Vector(p);
    for (const auto& x : pts)
        for (std::size_t i = 0; i < p; ++i) mean[i] += x[i] / n;
    cov.assign(p * p, 0.0);
    for (const auto& x : pts)
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j) cov[i * p + j] += (x[i] - mean[i]) * (x[j] - mean[j]) / n;
}

inline std::string fmt(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

}  // namespace verify_detail

/// Average pairwise square loss equals psi_S on the comparison moments.
inline SuiteResult verify_square_identity(std::size_t cases = 1000, std::uint64_t seed = 11) {
    using namespace verify_detail;
    SuiteResult r{"square-loss-moment-identity", 0, 0, {}};
    Rng rng(seed);
    for (std::size_t c = 0; c < cases; ++c) {
        const std::size_t n = 1 + uniform_index(rng, 200), p = 1 + uniform_index(rng, 20);
        std::vector<Vector> pts;
        for (std::size_t i = 0; i < n; ++i) pts.push_back(random_vector(rng, p));
        const Vector x = random_vector(rng, p), w = random_vector(rng, p);
        const int y = uniform_index(rng, 2) ? 1 : -1;
        Vector mean;
        std::vector<double> cov;
        direct_moments(pts, mean, cov);
        double s2 = 0.0;
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j) s2 += w[i] * cov[i * p + j] * w[j];
        const double expected = psi_s(y * dot(w, x - mean), std::max(0.0, s2));
        const double got = pairwise_square_avg(x, y, pts, w);
        r.check(std::abs(got - expected) <= 1e-10 * std::max(1.0, std::abs(expected)), [&] {
            return "n=" + std::to_string(n) + " p=" + std::to_string(p) + " pairwise=" + fmt(got) +
                   " psi_S=" + fmt(expected);
        });
    }
    return r;
}

/// Random vectors with prescribed mean and variance never beat psi_M on
/// average hinge loss.
inline SuiteResult verify_worst_case_upper_bound(std::size_t trials = 10000, std::uint64_t seed = 12) {
    SuiteResult r{"worst-case-hinge-upper-bound", 0, 0, {}};
    std::uint64_t s = seed;
    for (double mu : {-2.0, 0.0, 0.5, 1.0, 2.0})
        for (double sigma : {0.1, 1.0, 5.0})
            for (std::size_t n : {10u, 100u, 1000u}) {
                const auto wc = worst_case_sample(n, mu, sigma, trials, s++);
                const double psi = psi_m(mu, sigma * sigma).loss;
                r.check(wc.value() <= psi + 1e-9, [&] {
                    return "mu=" + verify_detail::fmt(mu) + " sigma=" + verify_detail::fmt(sigma) +
                           " n=" + std::to_string(n) + " max=" + verify_detail::fmt(wc.value()) +
                           " psi_M=" + verify_detail::fmt(psi);
                });
            }
    return r;
}

/// 0 <= psi_M - max(0, 1 - mu) <= sigma / 2.
inline SuiteResult verify_hinge_band(std::size_t per_axis = 100) {
    SuiteResult r{"hinge-band", 0, 0, {}};
    for (std::size_t i = 0; i < per_axis; ++i)
        for (std::size_t j = 0; j < per_axis; ++j) {
            const double mu = -5.0 + 10.0 * static_cast<double>(i) / static_cast<double>(per_axis - 1);
            const double sigma = 5.0 * static_cast<double>(j) / static_cast<double>(per_axis - 1);
            const double gap = psi_m(mu, sigma * sigma).loss - std::max(0.0, 1.0 - mu);
            r.check(gap >= 0.0 && gap <= sigma / 2.0, [&] {
                return "mu=" + verify_detail::fmt(mu) + " sigma=" + verify_detail::fmt(sigma) +
                       " gap=" + verify_detail::fmt(gap);
            });
        }
    return r;
}

/// Gradient of w -> psi_M(y w^T(x - xbar), w^T Sigma w): finite differences,
/// convexity along random triples, and ||grad|| <= 3 inside the unit ball.
inline SuiteResult verify_hinge_gradient(std::size_t fd_cases = 500, std::size_t convex_cases = 500,
                                         std::size_t norm_cases = 10000, std::uint64_t seed = 13) {
    using namespace verify_detail;
    SuiteResult r{"psi-m-gradient", 0, 0, {}};
    Rng rng(seed);
    struct Case {
        Vector x, mean;
        SymMatrix cov{0};
        int y = 1;
    };
    auto draw = [&](bool unit_ball) {
        const std::size_t n = 2 + uniform_index(rng, 30), p = 1 + uniform_index(rng, 8);
        std::vector<Vector> pts;
        for (std::size_t i = 0; i < n; ++i) pts.push_back(unit_ball ? random_in_ball(rng, p) : random_vector(rng, p));
        Case c;
        c.x = unit_ball ? random_in_ball(rng, p) : random_vector(rng, p);
        c.y = uniform_index(rng, 2) ? 1 : -1;
        std::vector<double> cov;
        direct_moments(pts, c.mean, cov);
        c.cov = SymMatrix(p);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = i; j < p; ++j) c.cov.set(i, j, cov[i * p + j]);
        c.cov.mark_covariance(1.0);
        return c;
    };
    auto value = [](const Case& c, const Vector& w) {
        return psi_m(c.y * dot(w, c.x - c.mean), quad_form(c.cov, w)).loss;
    };

    for (std::size_t k = 0; k < fd_cases;) {
        const Case c = draw(false);
        const Vector w = random_vector(rng, c.x.size());
        if (quad_form(c.cov, w) <= 0.01) continue;
        ++k;
        const Vector g = detail::grad_psi_m(c.x, c.y, c.mean, c.cov, w);
        Vector fd(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double h = 1e-6 * std::max(1.0, std::abs(w[i]));
            Vector a = w, b = w;
            a[i] += h;
            b[i] -= h;
            fd[i] = (value(c, a) - value(c, b)) / (2.0 * h);
        }
        const double err = norm(fd - g);
        r.check(err <= 1e-5 * std::max(1.0, norm(g)), [&] { return "finite difference error " + fmt(err); });
    }

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t k = 0; k < convex_cases; ++k) {
        const Case c = draw(false);
        const Vector w1 = random_vector(rng, c.x.size()), w2 = random_vector(rng, c.x.size());
        const double th = unit(rng);
        const double lhs = value(c, th * w1 + (1.0 - th) * w2);
        const double rhs = th * value(c, w1) + (1.0 - th) * value(c, w2);
        r.check(lhs <= rhs + 1e-12 * std::max(1.0, std::abs(rhs)),
                [&] { return "convexity: " + fmt(lhs) + " > " + fmt(rhs); });
    }

    for (std::size_t k = 0; k < norm_cases; ++k) {
        const Case c = draw(true);
        const Vector w = random_vector(rng, c.x.size(), std::pow(10.0, 4.0 * unit(rng) - 2.0));
        const double gn = norm(detail::grad_psi_m(c.x, c.y, c.mean, c.cov, w));
        r.check(gn <= 3.0, [&] { return "gradient norm " + fmt(gn) + " > 3"; });
    }
    return r;
}

/// Streaming moments equal the two-pass batch moments entry by entry.
inline SuiteResult verify_moment_recursion(std::size_t streams = 100, std::size_t max_len = 1000,
                                           std::size_t max_dim = 60, std::uint64_t seed = 14) {
    using namespace verify_detail;
    SuiteResult r{"moment-recursion", 0, 0, {}};
    Rng rng(seed);
    for (std::size_t s = 0; s < streams; ++s) {
        const std::size_t n = 1 + uniform_index(rng, max_len), p = 1 + uniform_index(rng, max_dim);
        const Vector offset = random_vector(rng, p, 3.0);
        std::vector<Vector> pts;
        ClassMoments m(p);
        for (std::size_t i = 0; i < n; ++i) {
            pts.push_back(random_vector(rng, p) + offset);
            m.update(pts.back());
        }
        Vector mean;
        std::vector<double> cov;
        direct_moments(pts, mean, cov);
        double worst = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            worst = std::max(worst, std::abs(m.mean()[i] - mean[i]));
            for (std::size_t j = 0; j < p; ++j) worst = std::max(worst, std::abs(m.cov()(i, j) - cov[i * p + j]));
        }
        r.check(worst <= 1e-9 && m.count() == n,
                [&] { return "n=" + std::to_string(n) + " p=" + std::to_string(p) + " max diff " + fmt(worst); });
    }
    return r;
}

/// ||f_t||_H <= (sqrt 2 + 1/2) / lambda along a run with eta_t = 1/(lambda t)
/// and unbounded buffers.
inline SuiteResult verify_kernel_norm_bound(std::size_t rounds = 1000, double lambda = 1.0,
                                            std::uint64_t seed = 15) {
    SuiteResult r{"kernel-norm-bound", 0, 0, {}};
    const auto stream = gaussian_unit_ball_stream(rounds, 2, seed, 0.3, 0.3, 0.5);
    KernelConfig cfg{LossKind::HingeSecondOrder, Kernel::gaussian(0.5), lambda, StepSchedule::inverse_lambda_t(lambda),
                     rounds, rounds, EvictionRule::MinResidual};
    KernelModel model(cfg);
    const double bound = kernel_norm_bound(lambda);
    for (std::size_t t = 0; t < stream.size(); ++t) {
        if (!model.step(stream[t])) continue;
        const double nrm = std::sqrt(model.last_norm_sq());
        r.check(nrm <= bound, [&] { return "round " + std::to_string(t + 1) + " norm " + verify_detail::fmt(nrm); });
    }
    const double final_norm = std::sqrt(model.rkhs_norm_sq());
    r.check(final_norm <= bound, [&] { return "final norm " + verify_detail::fmt(final_norm); });
    return r;
}

/// The implemented weight transfer reaches the smallest residual
/// || alpha_j k(., x_j) - delta k(., x_r) ||_H^2 found by searching every
/// candidate r and delta directly.
inline SuiteResult verify_eviction_optimality(std::size_t cases = 200, std::uint64_t seed = 16) {
    using namespace verify_detail;
    SuiteResult r{"eviction-optimality", 0, 0, {}};
    Rng rng(seed);
    std::uniform_real_distribution<double> width(0.3, 3.0);
    for (std::size_t c = 0; c < cases; ++c) {
        const std::size_t size = 1 + uniform_index(rng, 10), p = 1 + uniform_index(rng, 4);
        const Kernel k = Kernel::gaussian(width(rng));
        SupportBuffer buf(size);
        for (std::size_t i = 0; i < size; ++i) buf.push_back({i + 1, random_vector(rng, p), random_vector(rng, 1)[0]});
        const SupportEntry incoming{size + 1, random_vector(rng, p), random_vector(rng, 1)[0]};

        const SupportEntry j = buf.entries().front();
        std::vector<SupportEntry> candidates(buf.entries().begin() + 1, buf.entries().end());
        candidates.push_back(incoming);
        const auto residual = [&](const SupportEntry& e, double delta) {
            return j.alpha * j.alpha * k(j.x, j.x) - 2.0 * j.alpha * delta * k(e.x, j.x) + delta * delta * k(e.x, e.x);
        };
        double brute = j.alpha * j.alpha * k(j.x, j.x);
        for (const auto& e : candidates) {
            double lo = -2.0 * std::abs(j.alpha) - 1.0, hi = -lo;
            for (int it = 0; it < 300; ++it) {
                const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
                if (residual(e, m1) < residual(e, m2)) hi = m2;
                else lo = m1;
            }
            brute = std::min(brute, residual(e, 0.5 * (lo + hi)));
        }

        const auto res = update_buffer(buf, incoming, k, EvictionRule::MinResidual);
        const double scale = std::max(1.0, j.alpha * j.alpha);
        r.check(res.has_value() && std::abs(res->residual - brute) <= 1e-9 * scale, [&] {
            return "buffer size " + std::to_string(size) + ": implemented " + fmt(res ? res->residual : -1.0) +
                   " brute force " + fmt(brute);
        });
    }
    return r;
}

/// Signature of update_classifier, so a modified step can be checked.
using ClassifierStep = std::function<std::optional<ClassifierUpdate>(
    const Kernel&, SupportBuffer&, SupportBuffer&, const LabeledInstance&, LossKind, double, double)>;

/// On a model embedded in the finite basis of its supports plus the incoming
/// point, one update must equal beta - eta * grad_beta-space step of
/// 1/2 lambda beta^T K beta + psi(b, sigma^2), with the gradient derived by the
/// chain rule through f = K beta and checked against finite differences.
inline SuiteResult verify_gram_basis(const ClassifierStep& step = update_classifier, std::size_t cases = 200,
                                     std::uint64_t seed = 17) {
    using namespace verify_detail;
    SuiteResult r{"gram-basis-update", 0, 0, {}};
    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t c = 0; c < cases; ++c) {
        const LossKind loss = c % 2 ? LossKind::HingeSecondOrder : LossKind::SquareSecondOrder;
        const std::size_t p = 1 + uniform_index(rng, 3);
        const std::size_t n_cmp = 1 + uniform_index(rng, 5), n_own = uniform_index(rng, 5);
        const Kernel k = Kernel::gaussian(0.5 + 2.0 * unit(rng));
        const double lambda = 0.05 + unit(rng), eta = 0.05 + 0.5 * unit(rng);
        const int y = uniform_index(rng, 2) ? 1 : -1;

        SupportBuffer cmp(10), own(10);
        std::vector<Vector> basis;
        std::vector<double> beta;
        std::size_t idx = 1;
        for (std::size_t i = 0; i < n_cmp; ++i) {
            cmp.push_back({idx++, random_vector(rng, p), random_vector(rng, 1)[0]});
            basis.push_back(cmp.entries().back().x);
            beta.push_back(cmp.entries().back().alpha);
        }
        for (std::size_t i = 0; i < n_own; ++i) {
            own.push_back({idx++, random_vector(rng, p), random_vector(rng, 1)[0]});
            basis.push_back(own.entries().back().x);
            beta.push_back(own.entries().back().alpha);
        }
        const LabeledInstance z{random_vector(rng, p), y};
        basis.push_back(z.x);
        beta.push_back(0.0);
        const std::size_t m = basis.size(), t = m - 1;

        std::vector<double> K(m * m);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b) K[a * m + b] = k(basis[a], basis[b]);

        // Objective in basis coordinates; comparison points are 0 .. n_cmp-1.
        const auto objective = [&](const std::vector<double>& bt, std::vector<double>* grad) {
            std::vector<double> f(m, 0.0);
            for (std::size_t a = 0; a < m; ++a)
                for (std::size_t b = 0; b < m; ++b) f[a] += K[a * m + b] * bt[b];
            const double n = static_cast<double>(n_cmp);
            double mu = 0.0, s2 = 0.0;
            for (std::size_t i = 0; i < n_cmp; ++i) mu += f[i] / n;
            for (std::size_t i = 0; i < n_cmp; ++i) s2 += (f[i] - mu) * (f[i] - mu) / n;
            const double b = 1.0 - y * (f[t] - mu);
            const double root = std::sqrt(b * b + s2);
            double reg = 0.0;
            for (std::size_t a = 0; a < m; ++a) reg += bt[a] * f[a];
            const double val = 0.5 * lambda * reg +
                               (loss == LossKind::SquareSecondOrder ? 0.5 * (b * b + s2) : 0.5 * (b + root));
            if (grad) {
                // g = dL/df, then dL/dbeta = K (lambda beta + g)
                const double d_b = loss == LossKind::SquareSecondOrder ? b : 0.5 * (1.0 + b / root);
                const double d_s = loss == LossKind::SquareSecondOrder ? 0.5 : 0.25 / root;
                std::vector<double> g(m, 0.0);
                g[t] = -y * d_b;
                for (std::size_t i = 0; i < n_cmp; ++i) g[i] = (y * d_b + 2.0 * d_s * (f[i] - mu)) / n;
                for (std::size_t a = 0; a < m; ++a) g[a] += lambda * bt[a];
                *grad = std::move(g);
            }
            return val;
        };

        // dir = lambda beta + dL/df; the exact step is beta - eta * dir and
        // dL/dbeta = K dir, checked by finite differences.
        std::vector<double> dir;
        objective(beta, &dir);
        std::vector<double> kdir(m, 0.0);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b) kdir[a] += K[a * m + b] * dir[b];
        for (std::size_t a = 0; a < m; ++a) {
            const double h = 1e-6;
            auto up = beta, dn = beta;
            up[a] += h;
            dn[a] -= h;
            const double fd = (objective(up, nullptr) - objective(dn, nullptr)) / (2.0 * h);
            r.check(std::abs(fd - kdir[a]) <= 1e-5 * std::max(1.0, std::abs(kdir[a])),
                    [&] { return "oracle gradient disagrees with finite differences: " + fmt(fd) + " vs " + fmt(kdir[a]); });
        }

        const auto upd = step(k, cmp, own, z, loss, lambda, eta);
        std::vector<double> got;
        for (const auto& e : cmp.entries()) got.push_back(e.alpha);
        for (const auto& e : own.entries()) got.push_back(e.alpha);
        got.push_back(upd ? upd->incoming_alpha : 0.0);

        // Compare f_new pointwise on the basis points (and hence everywhere in span).
        double worst = 0.0;
        for (std::size_t a = 0; a < m; ++a) {
            double expected = 0.0, actual = 0.0;
            for (std::size_t b = 0; b < m; ++b) {
                expected += K[a * m + b] * (beta[b] - eta * dir[b]);
                actual += K[a * m + b] * got[b];
            }
            worst = std::max(worst, std::abs(expected - actual));
        }
        r.check(upd.has_value() && worst <= 1e-9, [&] {
            return std::string(to_string(loss)) + " case " + std::to_string(c) + ": f differs by " + fmt(worst);
        });
    }
    return r;
}

inline std::vector<SuiteResult> run_all_suites() {
    return {verify_square_identity(),  verify_worst_case_upper_bound(), verify_hinge_band(),
            verify_hinge_gradient(),   verify_moment_recursion(),       verify_kernel_norm_bound(),
            verify_eviction_optimality(), verify_gram_basis()};
}

}  // namespace soauc
