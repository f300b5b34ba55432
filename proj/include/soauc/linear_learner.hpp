#pragma once

// One-pass linear AUC learner over second-order surrogates (OAUC-S / OAUC-M /
// OAUC-M with constant step), plus Perceptron and PA-I baselines.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <utility>

#include "soauc/core.hpp"
#include "soauc/data.hpp"
#include "soauc/moments.hpp"
#include "soauc/schedule.hpp"
#include "soauc/surrogate.hpp"

namespace soauc {

struct LinearConfig {
    LossKind loss = LossKind::HingeSecondOrder;
    double lambda = 1.0;
    StepSchedule schedule = StepSchedule::inverse_lambda_t(1.0);
    /// Take a gradient step against the zero-initialized moments even when the
    /// opposite class has not been seen yet.
    bool step_with_empty_history = false;
};

inline void validate_instance(const LabeledInstance& z, std::size_t p) {
    require_same_dim(p, z.x.size(), "instance");
    detail::require_label(z.y);
}

class LinearModel {
public:
    LinearModel(std::size_t p, LinearConfig config)
        : config_(std::move(config)), w_(p), pos_(p), neg_(p) {
        if (!(config_.lambda >= 0.0)) throw std::invalid_argument("LinearModel: lambda must be >= 0");
    }

    /// Restores a snapshot.
    LinearModel(LinearConfig config, Vector w, std::size_t t, std::size_t gradient_rounds, ClassMoments pos,
                ClassMoments neg)
        : config_(std::move(config)), w_(std::move(w)), t_(t), gradient_rounds_(gradient_rounds),
          pos_(std::move(pos)), neg_(std::move(neg)) {
        require_same_dim(w_.size(), pos_.dim(), "LinearModel snapshot");
        require_same_dim(w_.size(), neg_.dim(), "LinearModel snapshot");
    }

    /// Consumes one instance. Returns the regularized round loss
    /// 1/2 lambda ||w_t||^2 + psi(y w_t^T(x - xbar), w_t^T Sigma w_t) evaluated before
    /// the update, or nothing when the opposite class has no history yet (the
    /// instance then only feeds its own class moments).
    std::optional<double> step(const LabeledInstance& z) {
        validate_instance(z, dim());
        const ClassMoments& opposite = z.y == 1 ? neg_ : pos_;
        std::optional<double> round_loss;
        if (opposite.count() > 0 || config_.step_with_empty_history) {
            // Zero-count moments hold the zero mean / covariance.
            const Vector diff = z.x - opposite.mean();
            const double mu = z.y * dot(w_, diff);
            const double sigma2 = quad_form(opposite.cov(), w_);
            round_loss = 0.5 * config_.lambda * squared_norm(w_) + surrogate_value(config_.loss, mu, sigma2);

            const double eta = config_.schedule.eta(++gradient_rounds_);
            const Vector g = surrogate_gradient(config_.loss, z.x, z.y, opposite.mean(), opposite.cov(), w_);
            w_ *= 1.0 - eta * config_.lambda;
            w_.axpy(-eta, g);
        }
        (z.y == 1 ? pos_ : neg_).update(z.x);
        ++t_;
        return round_loss;
    }

    double score(const Vector& x) const { return dot(w_, x); }

    std::size_t dim() const noexcept { return w_.size(); }
    const Vector& weights() const noexcept { return w_; }
    const LinearConfig& config() const noexcept { return config_; }
    /// 1 + number of consumed instances.
    std::size_t t() const noexcept { return t_; }
    std::size_t gradient_rounds() const noexcept { return gradient_rounds_; }
    const ClassMoments& positive_moments() const noexcept { return pos_; }
    const ClassMoments& negative_moments() const noexcept { return neg_; }

private:
    LinearConfig config_;
    Vector w_;
    std::size_t t_ = 1;
    std::size_t gradient_rounds_ = 0;
    ClassMoments pos_;
    ClassMoments neg_;
};

enum class BaselineKind { Perceptron, PassiveAggressiveI };

/// Classical online classifiers used for comparison. The bias is kept for the
/// scoring contract but not learned; AUC is invariant to it.
class BaselineModel {
public:
    BaselineModel(std::size_t p, BaselineKind kind, double c = 1.0) : kind_(kind), c_(c), w_(p) {
        if (kind_ == BaselineKind::PassiveAggressiveI && !(c_ > 0.0))
            throw std::invalid_argument("PA-I: C must be > 0");
    }

    BaselineModel(BaselineKind kind, double c, Vector w) : BaselineModel(w.size(), kind, c) { w_ = std::move(w); }

    void step(const LabeledInstance& z) {
        validate_instance(z, w_.size());
        const double margin = z.y * dot(w_, z.x);
        if (kind_ == BaselineKind::Perceptron) {
            if (margin <= 0.0) w_.axpy(z.y, z.x);
            return;
        }
        const double loss = std::max(0.0, 1.0 - margin);
        const double sq = squared_norm(z.x);
        if (loss == 0.0 || sq == 0.0) return;
        const double tau = std::min(c_, loss / sq);
        w_.axpy(tau * z.y, z.x);
    }

    double score(const Vector& x) const { return dot(w_, x) + bias_; }

    BaselineKind kind() const noexcept { return kind_; }
    double c() const noexcept { return c_; }
    const Vector& weights() const noexcept { return w_; }
    double bias() const noexcept { return bias_; }

private:
    BaselineKind kind_;
    double c_;
    Vector w_;
    double bias_ = 0.0;
};

}  // namespace soauc
