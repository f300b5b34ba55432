#pragma once

// Kernelized one-pass AUC learner over two budgeted support buffers.
//
// f(x) = sum_i alpha_i k(x_i, x) over both buffers. Each round the instance is
// compared against the opposite-class buffer, all weights take one functional
// gradient step, and the instance joins its own buffer (FIFO eviction with the
// evicted weight projected onto one remaining support).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "soauc/core.hpp"
#include "soauc/data.hpp"
#include "soauc/schedule.hpp"
#include "soauc/surrogate.hpp"

namespace soauc {

struct GaussianKernel {
    double width = 1.0;  // k(x, x') = exp(-||x - x'||^2 / width^2)
};
struct LinearKernel {};

class Kernel {
public:
    Kernel() : kind_(GaussianKernel{}) {}
    Kernel(GaussianKernel g) : kind_(g) {  // NOLINT: implicit by intent
        if (!(g.width > 0.0)) throw std::invalid_argument("Gaussian kernel width must be > 0");
    }
    Kernel(LinearKernel l) : kind_(l) {}  // NOLINT

    static Kernel gaussian(double width) { return Kernel(GaussianKernel{width}); }
    static Kernel linear() { return Kernel(LinearKernel{}); }

    double operator()(const Vector& a, const Vector& b) const {
        if (const auto* g = std::get_if<GaussianKernel>(&kind_))
            return std::exp(-squared_distance(a, b) / (g->width * g->width));
        return dot(a, b);
    }

    bool is_gaussian() const noexcept { return std::holds_alternative<GaussianKernel>(kind_); }
    double width() const noexcept {
        const auto* g = std::get_if<GaussianKernel>(&kind_);
        return g ? g->width : 0.0;
    }

private:
    std::variant<GaussianKernel, LinearKernel> kind_;
};

inline constexpr std::size_t kNoSlot = static_cast<std::size_t>(-1);

struct SupportEntry {
    std::size_t index = 0;  // arrival index
    Vector x;
    double alpha = 0.0;
    std::size_t slot = kNoSlot;  // row in a GramCache, if any
};

/// Dense kernel matrix over a bounded set of live supports, addressed by slot.
/// Values are computed once on insertion and are bitwise equal to direct
/// evaluation (the kernel is symmetric in floating point).
class GramCache {
public:
    GramCache(Kernel kernel, std::size_t capacity)
        : kernel_(std::move(kernel)), cap_(capacity), k_(capacity * capacity, 0.0), x_(capacity), live_(capacity, 0) {}

    std::size_t capacity() const noexcept { return cap_; }

    std::size_t insert(const Vector& x) {
        std::size_t s = 0;
        while (s < cap_ && live_[s]) ++s;
        if (s == cap_) throw std::logic_error("GramCache: full");
        live_[s] = 1;
        x_[s] = x;
        for (std::size_t o = 0; o < cap_; ++o)
            if (live_[o]) k_[s * cap_ + o] = k_[o * cap_ + s] = kernel_(x_[o], x);
        return s;
    }
    void release(std::size_t slot) {
        if (slot < cap_) live_[slot] = 0;
    }
    double operator()(std::size_t a, std::size_t b) const noexcept { return k_[a * cap_ + b]; }

private:
    Kernel kernel_;
    std::size_t cap_;
    std::vector<double> k_;
    std::vector<Vector> x_;
    std::vector<char> live_;
};

/// FIFO store of at most `budget` supports, oldest first.
class SupportBuffer {
public:
    explicit SupportBuffer(std::size_t budget) : budget_(budget) {
        if (budget_ == 0) throw std::invalid_argument("SupportBuffer: budget must be >= 1");
    }

    std::size_t budget() const noexcept { return budget_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    bool full() const noexcept { return entries_.size() >= budget_; }

    const std::vector<SupportEntry>& entries() const noexcept { return entries_; }
    std::vector<SupportEntry>& entries() noexcept { return entries_; }

    void push_back(SupportEntry e) {
        if (!entries_.empty() && e.index <= entries_.back().index)
            throw std::invalid_argument("SupportBuffer: arrival indices must increase");
        if (full()) throw std::logic_error("SupportBuffer: push into a full buffer");
        entries_.push_back(std::move(e));
    }
    SupportEntry pop_front() {
        SupportEntry e = std::move(entries_.front());
        entries_.erase(entries_.begin());
        return e;
    }

private:
    std::size_t budget_;
    std::vector<SupportEntry> entries_;
};

/// How the evicted weight picks its transfer target r.
enum class EvictionRule {
    /// argmax_r k(x_r, x_j)^2 / k(x_r, x_r): the minimizer of the residual
    /// || alpha_j k(., x_j) - delta k(., x_r) ||_H^2.
    MinResidual,
    /// argmin_r |k(x_r, x_j)|: the least-correlated support, kept for literal reproduction.
    MinAbsKernel,
};

struct EvictionResult {
    std::size_t evicted_index = 0;
    std::size_t target_index = 0;
    double delta = 0.0;
    double residual = 0.0;  // || alpha_j k(., x_j) - delta k(., x_r) ||_H^2
};

/// Appends `incoming`; when the buffer is full the oldest support j is evicted
/// first and alpha_j k(x_r, x_j) / k(x_r, x_r) is added to the chosen target r,
/// r ranging over the remaining supports and the incoming instance.
inline std::optional<EvictionResult> update_buffer(SupportBuffer& buf, SupportEntry incoming, const Kernel& kernel,
                                                   EvictionRule rule = EvictionRule::MinResidual) {
    if (!buf.full()) {
        buf.push_back(std::move(incoming));
        return std::nullopt;
    }
    auto& entries = buf.entries();
    const SupportEntry& evicted = entries.front();
    const double k_jj = kernel(evicted.x, evicted.x);

    SupportEntry* target = nullptr;
    double best = 0.0, k_rj_best = 0.0, k_rr_best = 1.0;
    auto consider = [&](SupportEntry& cand) {
        const double k_rr = kernel(cand.x, cand.x);
        if (!(k_rr > 0.0)) return;
        const double k_rj = kernel(cand.x, evicted.x);
        const double score = rule == EvictionRule::MinResidual ? k_rj * k_rj / k_rr : std::abs(k_rj);
        const bool better = rule == EvictionRule::MinResidual ? score > best : score < best;
        if (target == nullptr || better) {
            target = &cand;
            best = score;
            k_rj_best = k_rj;
            k_rr_best = k_rr;
        }
    };
    for (std::size_t i = 1; i < entries.size(); ++i) consider(entries[i]);
    consider(incoming);

    EvictionResult res;
    res.evicted_index = evicted.index;
    const double alpha_j = evicted.alpha;
    if (target != nullptr) {
        res.target_index = target->index;
        res.delta = alpha_j * k_rj_best / k_rr_best;
        target->alpha += res.delta;
        res.residual = alpha_j * alpha_j * k_jj - 2.0 * alpha_j * res.delta * k_rj_best +
                       res.delta * res.delta * k_rr_best;
    } else {
        res.residual = alpha_j * alpha_j * k_jj;
    }
    buf.pop_front();
    buf.push_back(std::move(incoming));
    return res;
}

struct KernelLossEval {
    double f_x = 0.0;      // f_t(x_t)
    double mu_t = 0.0;     // mean of f over the comparison buffer
    double sigma2_t = 0.0; // variance of f over the comparison buffer
    double b_t = 0.0;      // 1 - y (f_t(x_t) - mu_t)
    double a_t = 0.0;      // b_t^2 + sigma2_t
    double psi_t = 0.0;    // (b_t + sqrt(a_t)) / 2
    double surrogate = 0.0;
};

struct ClassifierUpdate {
    double incoming_alpha = 0.0;
    KernelLossEval eval;
};

inline double kernel_expansion(const Kernel& kernel, const std::vector<SupportEntry>& a,
                               const std::vector<SupportEntry>& b, const Vector& x) {
    double f = 0.0;
    for (const auto& e : a) f += e.alpha * kernel(e.x, x);
    for (const auto& e : b) f += e.alpha * kernel(e.x, x);
    return f;
}

/// One functional gradient step on 1/2 lambda ||f||^2 + psi against the
/// comparison buffer; rewrites the weights of both buffers in place and returns
/// the weight of the incoming instance. Returns nothing (and changes nothing)
/// when the comparison buffer is empty.
///
/// psi_M:  incoming  eta y Psi / sqrt(A)
///         compared  (1 - lambda eta) alpha_i - eta / (N sqrt(A)) (y Psi + (f(x_i) - mu) / 2)
/// psi_S:  incoming  eta y b
///         compared  (1 - lambda eta) alpha_i - eta / N (y b + f(x_i) - mu)
/// others scale by (1 - lambda eta). With A <= kSigmaEps, Psi / sqrt(A) is
/// replaced by its limit 1/2 and (f(x_i) - mu) / sqrt(A) by 0.
namespace detail {

// `between(a, b)` gives k(a.x, b.x) for two buffered supports.
template <class Between>
std::optional<ClassifierUpdate> update_classifier_impl(const Kernel& kernel, SupportBuffer& comparison,
                                                       SupportBuffer& same, const LabeledInstance& z, LossKind loss,
                                                       double lambda, double eta, const Between& between) {
    if (comparison.empty()) return std::nullopt;
    detail::require_label(z.y);
    auto& cmp = comparison.entries();
    auto& own = same.entries();
    const double y = z.y;
    const auto n = static_cast<double>(cmp.size());

    ClassifierUpdate out;
    KernelLossEval& ev = out.eval;
    ev.f_x = kernel_expansion(kernel, cmp, own, z.x);

    std::vector<double> f_cmp(cmp.size());
    for (std::size_t i = 0; i < cmp.size(); ++i) {
        double f = 0.0;
        for (const auto& e : cmp) f += e.alpha * between(e, cmp[i]);
        for (const auto& e : own) f += e.alpha * between(e, cmp[i]);
        f_cmp[i] = f;
    }
    for (double f : f_cmp) ev.mu_t += f;
    ev.mu_t /= n;
    for (double f : f_cmp) ev.sigma2_t += (f - ev.mu_t) * (f - ev.mu_t);
    ev.sigma2_t /= n;

    ev.b_t = 1.0 - y * (ev.f_x - ev.mu_t);
    ev.a_t = ev.b_t * ev.b_t + ev.sigma2_t;
    const double root = std::sqrt(ev.a_t);
    ev.psi_t = 0.5 * (ev.b_t + root);
    ev.surrogate = surrogate_value(loss, 1.0 - ev.b_t, ev.sigma2_t);

    const double decay = 1.0 - lambda * eta;
    for (auto& e : cmp) e.alpha *= decay;
    for (auto& e : own) e.alpha *= decay;

    if (loss == LossKind::HingeSecondOrder) {
        const bool tiny = ev.a_t <= kSigmaEps;
        const double ratio = tiny ? 0.5 : ev.psi_t / root;
        out.incoming_alpha = eta * y * ratio;
        for (std::size_t i = 0; i < cmp.size(); ++i) {
            const double spread = tiny ? 0.0 : 0.5 * (f_cmp[i] - ev.mu_t) / root;
            cmp[i].alpha -= eta / n * (y * ratio + spread);
        }
    } else {
        out.incoming_alpha = eta * y * ev.b_t;
        for (std::size_t i = 0; i < cmp.size(); ++i) cmp[i].alpha -= eta / n * (y * ev.b_t + f_cmp[i] - ev.mu_t);
    }
    return out;
}

}  // namespace detail

inline std::optional<ClassifierUpdate> update_classifier(const Kernel& kernel, SupportBuffer& comparison,
                                                         SupportBuffer& same, const LabeledInstance& z,
                                                         LossKind loss, double lambda, double eta) {
    return detail::update_classifier_impl(
        kernel, comparison, same, z, loss, lambda, eta,
        [&](const SupportEntry& a, const SupportEntry& b) { return kernel(a.x, b.x); });
}

/// Same step with support-support kernel values read from `gram`; every
/// buffered entry must carry a live slot.
inline std::optional<ClassifierUpdate> update_classifier_cached(const GramCache& gram, const Kernel& kernel,
                                                                SupportBuffer& comparison, SupportBuffer& same,
                                                                const LabeledInstance& z, LossKind loss,
                                                                double lambda, double eta) {
    return detail::update_classifier_impl(
        kernel, comparison, same, z, loss, lambda, eta,
        [&](const SupportEntry& a, const SupportEntry& b) { return gram(a.slot, b.slot); });
}

struct KernelConfig {
    LossKind loss = LossKind::HingeSecondOrder;
    Kernel kernel = Kernel::gaussian(1.0);
    double lambda = 1.0;
    StepSchedule schedule = StepSchedule::inverse_lambda_t(1.0);
    std::size_t budget_pos = 100;
    std::size_t budget_neg = 100;
    EvictionRule eviction = EvictionRule::MinResidual;
};

class KernelModel {
public:
    explicit KernelModel(KernelConfig config)
        : config_(std::move(config)), pos_(config_.budget_pos), neg_(config_.budget_neg) {
        if (!(config_.lambda > 0.0)) throw std::invalid_argument("KernelModel: lambda must be > 0");
        init_cache();
    }

    /// Restores a snapshot.
    KernelModel(KernelConfig config, SupportBuffer pos, SupportBuffer neg, std::size_t t,
                std::size_t gradient_rounds)
        : config_(std::move(config)), pos_(std::move(pos)), neg_(std::move(neg)), t_(t),
          gradient_rounds_(gradient_rounds) {
        if (!pos_.empty()) dim_ = pos_.entries().front().x.size();
        else if (!neg_.empty()) dim_ = neg_.entries().front().x.size();
        init_cache();
    }

    /// Consumes one instance; returns 1/2 lambda ||f_t||_H^2 + psi(...) evaluated
    /// before the update, or nothing when the opposite buffer is empty (the
    /// instance is then buffered with weight 0).
    std::optional<double> step(const LabeledInstance& z) { return advance(z, true); }

    /// Same update as step() without the O(B^2) norm needed for the round loss.
    void learn(const LabeledInstance& z) { advance(z, false); }

    double score(const Vector& x) const { return kernel_expansion(config_.kernel, pos_.entries(), neg_.entries(), x); }

    /// alpha^T K alpha over all buffered supports.
    double rkhs_norm_sq() const {
        std::vector<const SupportEntry*> all;
        for (const auto& e : pos_.entries()) all.push_back(&e);
        for (const auto& e : neg_.entries()) all.push_back(&e);
        auto k = [&](const SupportEntry* a, const SupportEntry* b) {
            return gram_ ? (*gram_)(a->slot, b->slot) : config_.kernel(a->x, b->x);
        };
        double s = 0.0;
        for (std::size_t i = 0; i < all.size(); ++i) {
            if (all[i]->alpha == 0.0) continue;
            s += all[i]->alpha * all[i]->alpha * k(all[i], all[i]);
            for (std::size_t j = i + 1; j < all.size(); ++j) s += 2.0 * all[i]->alpha * all[j]->alpha * k(all[i], all[j]);
        }
        return std::max(0.0, s);
    }

    const KernelConfig& config() const noexcept { return config_; }
    const SupportBuffer& positive_buffer() const noexcept { return pos_; }
    const SupportBuffer& negative_buffer() const noexcept { return neg_; }
    std::size_t t() const noexcept { return t_; }
    std::size_t gradient_rounds() const noexcept { return gradient_rounds_; }
    /// ||f_t||_H^2 before the most recent gradient round.
    double last_norm_sq() const noexcept { return last_norm_sq_; }
    const std::optional<KernelLossEval>& last_eval() const noexcept { return last_eval_; }
    const std::optional<EvictionResult>& last_eviction() const noexcept { return last_eviction_; }

private:
    std::optional<double> advance(const LabeledInstance& z, bool with_loss) {
        detail::require_label(z.y);
        if (dim_ == 0) dim_ = z.x.size();
        require_same_dim(dim_, z.x.size(), "KernelModel::step");

        SupportBuffer& comparison = z.y == 1 ? neg_ : pos_;
        SupportBuffer& same = z.y == 1 ? pos_ : neg_;
        const std::size_t index = t_++;

        if (comparison.empty()) {
            last_eviction_ = admit(same, {index, z.x, 0.0});
            last_eval_.reset();
            return std::nullopt;
        }
        if (with_loss) last_norm_sq_ = rkhs_norm_sq();
        const double eta = config_.schedule.eta(++gradient_rounds_);
        auto upd = gram_ ? update_classifier_cached(*gram_, config_.kernel, comparison, same, z, config_.loss,
                                                    config_.lambda, eta)
                         : update_classifier(config_.kernel, comparison, same, z, config_.loss, config_.lambda, eta);
        last_eval_ = upd->eval;
        last_eviction_ = admit(same, {index, z.x, upd->incoming_alpha});
        return 0.5 * config_.lambda * last_norm_sq_ + upd->eval.surrogate;
    }

    // Buffered supports plus the incoming instance; larger budgets evaluate
    // the kernel directly.
    static constexpr std::size_t kMaxCachedSupports = 2048;

    void init_cache() {
        const std::size_t b = pos_.budget(), n = neg_.budget();
        if (b >= kMaxCachedSupports || n >= kMaxCachedSupports - b) return;
        gram_.emplace(config_.kernel, b + n + 1);
        for (auto* buf : {&pos_, &neg_})
            for (auto& e : buf->entries()) e.slot = gram_->insert(e.x);
    }

    std::optional<EvictionResult> admit(SupportBuffer& buf, SupportEntry e) {
        std::size_t gone = kNoSlot;
        if (gram_) {
            e.slot = gram_->insert(e.x);
            if (buf.full()) gone = buf.entries().front().slot;
        }
        auto r = update_buffer(buf, std::move(e), config_.kernel, config_.eviction);
        if (gram_) gram_->release(gone);
        return r;
    }

    KernelConfig config_;
    std::optional<GramCache> gram_;
    SupportBuffer pos_;
    SupportBuffer neg_;
    std::size_t t_ = 1;
    std::size_t gradient_rounds_ = 0;
    std::size_t dim_ = 0;
    double last_norm_sq_ = 0.0;
    std::optional<KernelLossEval> last_eval_;
    std::optional<EvictionResult> last_eviction_;
};

}  // namespace soauc
