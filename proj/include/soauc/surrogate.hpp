#pragma once

// Second-order surrogate losses psi_S / psi_M, their gradients in w, and the
// pairwise reference losses they stand in for.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

#include "soauc/core.hpp"
#include "soauc/moments.hpp"

namespace soauc {

/// sigma^2 at or below this is treated as zero variance (plain hinge).
inline constexpr double kSigmaEps = 1e-12;

enum class LossKind { SquareSecondOrder, HingeSecondOrder };

inline const char* to_string(LossKind k) noexcept {
    return k == LossKind::SquareSecondOrder ? "square" : "hinge";
}

struct SurrogateEval {
    double mu = 0.0;
    double sigma2 = 0.0;
    double v = 0.0;        // (1 - mu) / sigma, 0 when degenerate
    double cap_phi = 0.0;  // Phi_M(v)
    double low_phi = 0.0;  // phi_M(v)
    double loss = 0.0;
    bool degenerate = false;
};

inline double cap_phi_m(double v) noexcept { return 0.5 * (1.0 + v / std::sqrt(1.0 + v * v)); }
inline double low_phi_m(double v) noexcept { return 0.5 * std::sqrt(1.0 / (1.0 + v * v)); }

inline void require_nonnegative_variance(double sigma2) {
    if (!(sigma2 >= 0.0)) throw std::invalid_argument("surrogate: sigma2 must be >= 0");
}

/// (1 - mu)^2 + sigma^2
inline double psi_s(double mu, double sigma2) {
    require_nonnegative_variance(sigma2);
    const double b = 1.0 - mu;
    return b * b + sigma2;
}

/// 1/2 [(1 - mu) + sqrt((1 - mu)^2 + sigma^2)], evaluated without cancellation.
/// Falls back to max(0, 1 - mu) when sigma^2 <= kSigmaEps.
inline SurrogateEval psi_m(double mu, double sigma2) {
    require_nonnegative_variance(sigma2);
    SurrogateEval e;
    e.mu = mu;
    e.sigma2 = sigma2;
    const double b = 1.0 - mu;
    if (sigma2 <= kSigmaEps) {
        e.degenerate = true;
        e.loss = std::max(0.0, b);
        e.cap_phi = b > 0.0 ? 1.0 : (b < 0.0 ? 0.0 : 0.5);
        e.low_phi = 0.0;
        return e;
    }
    const double sigma = std::sqrt(sigma2);
    const double root = std::sqrt(b * b + sigma2);
    e.v = b / sigma;
    e.cap_phi = cap_phi_m(e.v);
    e.low_phi = low_phi_m(e.v);
    e.loss = b >= 0.0 ? 0.5 * (b + root) : 0.5 * sigma2 / (root - b);
    return e;
}

/// The per-round surrogate a learner optimises. The square variant is halved so
/// that its gradient is exactly grad_psi_s.
inline double surrogate_value(LossKind kind, double mu, double sigma2) {
    return kind == LossKind::SquareSecondOrder ? 0.5 * psi_s(mu, sigma2) : psi_m(mu, sigma2).loss;
}

namespace detail {

// Gradients against explicit (mean, cov); no count check, so a learner can
// evaluate against zero moments when asked to.
inline Vector grad_psi_s(const Vector& x, int y, const Vector& mean, const SymMatrix& cov,
                         const Vector& w) {
    Vector diff = x - mean;
    const double margin = 1.0 - y * dot(w, diff);
    Vector g = matvec(cov, w);
    g.axpy(-margin * y, diff);
    return g;
}

inline Vector grad_psi_m(const Vector& x, int y, const Vector& mean, const SymMatrix& cov,
                         const Vector& w) {
    Vector diff = x - mean;
    const double b = 1.0 - y * dot(w, diff);
    const double sigma2 = quad_form(cov, w);
    if (sigma2 <= kSigmaEps) {
        // hinge subgradient, 0 at the kink
        if (b > 0.0) return (-static_cast<double>(y)) * diff;
        return Vector(x.size());
    }
    const double sigma = std::sqrt(sigma2);
    const double v = b / sigma;
    Vector g = matvec(cov, w);
    g *= low_phi_m(v) / sigma;
    g.axpy(-cap_phi_m(v) * y, diff);
    return g;
}

inline void require_label(int y) {
    if (y != 1 && y != -1) throw std::invalid_argument("label must be -1 or +1");
}

}  // namespace detail

inline void require_history(const ClassMoments& m) {
    if (m.count() == 0) throw std::invalid_argument("surrogate gradient: comparison class has no history");
}

/// (1 - y w^T(x - xbar)) (-y (x - xbar)) + Sigma w
inline Vector grad_psi_s(const Vector& x, int y, const ClassMoments& m, const Vector& w) {
    detail::require_label(y);
    require_history(m);
    return detail::grad_psi_s(x, y, m.mean(), m.cov(), w);
}

/// -Phi_M(v) y (x - xbar) + phi_M(v) Sigma w / sqrt(w^T Sigma w), or the hinge
/// subgradient when w^T Sigma w <= kSigmaEps.
inline Vector grad_psi_m(const Vector& x, int y, const ClassMoments& m, const Vector& w) {
    detail::require_label(y);
    require_history(m);
    return detail::grad_psi_m(x, y, m.mean(), m.cov(), w);
}

inline Vector surrogate_gradient(LossKind kind, const Vector& x, int y, const Vector& mean,
                                 const SymMatrix& cov, const Vector& w) {
    return kind == LossKind::SquareSecondOrder ? detail::grad_psi_s(x, y, mean, cov, w)
                                               : detail::grad_psi_m(x, y, mean, cov, w);
}

// --- pairwise reference losses ------------------------------------------------

namespace detail {
template <class Term>
double pairwise_avg(const Vector& x, int y, std::span<const Vector> points, const Vector& w, Term term) {
    if (points.empty()) throw std::invalid_argument("pairwise average over an empty comparison set");
    require_label(y);
    const double wx = dot(w, x);
    double s = 0.0;
    for (const auto& xi : points) s += term(y * (wx - dot(w, xi)));
    return s / static_cast<double>(points.size());
}
}  // namespace detail

/// (1/n) sum_i max(0, 1 - y w^T(x - x_i))
inline double pairwise_hinge_avg(const Vector& x, int y, std::span<const Vector> points, const Vector& w) {
    return detail::pairwise_avg(x, y, points, w, [](double c) { return std::max(0.0, 1.0 - c); });
}

/// (1/n) sum_i (1 - y w^T(x - x_i))^2
inline double pairwise_square_avg(const Vector& x, int y, std::span<const Vector> points, const Vector& w) {
    return detail::pairwise_avg(x, y, points, w, [](double c) { return (1.0 - c) * (1.0 - c); });
}

/// (1/n) sum_i 1[y w^T(x - x_i) < 0]
inline double pairwise_zero_one_avg(const Vector& x, int y, std::span<const Vector> points, const Vector& w) {
    return detail::pairwise_avg(x, y, points, w, [](double c) { return c < 0.0 ? 1.0 : 0.0; });
}

// --- worst case over the moment-constrained set -------------------------------

struct WorstCaseResult {
    double sampled_max = 0.0;   // best of the random renormalized samples
    double extremal_max = 0.0;  // best of the two-level candidates
    double value() const noexcept { return std::max(sampled_max, extremal_max); }
};

inline double average_hinge(std::span<const double> c) {
    double s = 0.0;
    for (double ci : c) s += std::max(0.0, 1.0 - ci);
    return s / static_cast<double>(c.size());
}

/// Average hinge loss of the two-level vector with k entries at
/// mu - sqrt((n-k)/k) sigma and n-k entries at mu + sqrt(k/(n-k)) sigma.
inline double two_level_hinge(std::size_t n, std::size_t k, double mu, double sigma) {
    const double nd = static_cast<double>(n), kd = static_cast<double>(k);
    const double low = mu - std::sqrt((nd - kd) / kd) * sigma;
    const double high = mu + std::sqrt(kd / (nd - kd)) * sigma;
    return (kd * std::max(0.0, 1.0 - low) + (nd - kd) * std::max(0.0, 1.0 - high)) / nd;
}

/// Searches the set {c in R^n : mean(c) = mu, var(c) = sigma^2} for large
/// average hinge loss: `trials` random vectors affinely renormalized to the
/// exact moments, plus the two-level configurations at floor/ceil of
/// k* = (n/2)(1 + v / sqrt(1 + v^2)).
inline WorstCaseResult worst_case_sample(std::size_t n, double mu, double sigma, std::size_t trials,
                                         std::uint64_t rng_seed) {
    if (n < 2) throw std::invalid_argument("worst_case_sample: n must be >= 2");
    if (!(sigma > 0.0)) throw std::invalid_argument("worst_case_sample: sigma must be > 0");
    if (trials < 1) throw std::invalid_argument("worst_case_sample: trials must be >= 1");

    WorstCaseResult r;
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> normal;
    std::exponential_distribution<double> expo;
    std::uniform_real_distribution<double> unif;
    std::vector<double> c(n);
    const double nd = static_cast<double>(n);

    for (std::size_t trial = 0; trial < trials;) {
        // Rotate between symmetric, skewed and heavy-tailed shapes.
        for (std::size_t i = 0; i < n; ++i) {
            switch (trial % 3) {
                case 0: c[i] = normal(rng); break;
                case 1: c[i] = -expo(rng); break;
                default: c[i] = unif(rng) < 0.5 ? -expo(rng) * expo(rng) : normal(rng); break;
            }
        }
        double m = 0.0;
        for (double ci : c) m += ci;
        m /= nd;
        double var = 0.0;
        for (double ci : c) var += (ci - m) * (ci - m);
        var /= nd;
        if (!(var > 1e-300)) continue;  // all equal: resample
        const double scale = sigma / std::sqrt(var);
        for (double& ci : c) ci = mu + (ci - m) * scale;
        r.sampled_max = std::max(r.sampled_max, average_hinge(c));
        ++trial;
    }

    const double b = 1.0 - mu;
    const double v = b / sigma;
    const double k_star = 0.5 * nd * (1.0 + v / std::sqrt(1.0 + v * v));
    for (double kk : {std::floor(k_star), std::ceil(k_star)}) {
        const auto k = static_cast<std::size_t>(std::clamp(kk, 1.0, nd - 1.0));
        r.extremal_max = std::max(r.extremal_max, two_level_hinge(n, k, mu, sigma));
    }
    return r;
}

}  // namespace soauc
