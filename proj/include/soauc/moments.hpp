#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>

#include "soauc/core.hpp"

namespace soauc {

/// Running count, mean and population covariance of one class.
///
/// update() applies the recursions
///   mean_t = mean_{t-1} + (x - mean_{t-1}) / N_t
///   cov_t  = cov_{t-1} + mean_{t-1} mean_{t-1}^T - mean_t mean_t^T
///            + (x x^T - cov_{t-1} - mean_{t-1} mean_{t-1}^T) / N_t
/// and re-symmetrizes afterwards. There is no removal.
class ClassMoments {
public:
    ClassMoments() = default;
    explicit ClassMoments(std::size_t p) : mean_(p), cov_(p) { cov_.mark_covariance(0.0); }

    ClassMoments(std::size_t count, Vector mean, SymMatrix cov, double roundoff_scale = 0.0)
        : count_(count), mean_(std::move(mean)), cov_(std::move(cov)) {
        require_same_dim(mean_.size(), cov_.dim(), "ClassMoments");
        cov_.mark_covariance(roundoff_scale);
    }

    std::size_t count() const noexcept { return count_; }
    std::size_t dim() const noexcept { return mean_.size(); }
    const Vector& mean() const noexcept { return mean_; }
    const SymMatrix& cov() const noexcept { return cov_; }

    void update(const Vector& x) {
        require_same_dim(dim(), x.size(), "ClassMoments::update");
        ++count_;
        const double inv_n = 1.0 / static_cast<double>(count_);

        Vector new_mean = mean_;
        new_mean.axpy(inv_n, x - mean_);

        // cov += m_old m_old^T (1 - 1/N) - m_new m_new^T + x x^T / N - cov / N
        cov_.add_scaled(-inv_n, cov_);
        cov_.add_outer(1.0 - inv_n, mean_);
        cov_.add_outer(-1.0, new_mean);
        cov_.add_outer(inv_n, x);
        cov_.symmetrize();
        cov_.mark_covariance(std::max(cov_.roundoff_scale(), squared_norm(x)));

        mean_ = std::move(new_mean);
    }

private:
    std::size_t count_ = 0;
    Vector mean_;
    SymMatrix cov_;
};

/// Two-pass mean / population covariance of a point set.
inline ClassMoments batch_recompute(std::span<const Vector> points, std::size_t p) {
    const std::size_t n = points.size();
    for (const auto& x : points) require_same_dim(p, x.size(), "batch_recompute");
    if (n == 0) return ClassMoments(p);

    Vector mean(p);
    for (const auto& x : points) mean += x;
    mean *= 1.0 / static_cast<double>(n);

    SymMatrix cov(p);
    double scale = 0.0;
    for (const auto& x : points) {
        cov.add_outer(1.0 / static_cast<double>(n), x - mean);
        scale = std::max(scale, squared_norm(x));
    }
    return ClassMoments(n, std::move(mean), std::move(cov), scale);
}

inline ClassMoments batch_recompute(std::span<const Vector> points) {
    if (points.empty()) throw std::invalid_argument("batch_recompute: dimension unknown for empty set");
    return batch_recompute(points, points.front().size());
}

}  // namespace soauc
