#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "soauc/kernel_learner.hpp"
#include "soauc/linear_learner.hpp"
#include "soauc/regret.hpp"
#include "soauc/synthetic.hpp"

using namespace soauc;

namespace {

KernelConfig hinge_kernel(double lambda, double width, std::size_t budget) {
    KernelConfig c;
    c.loss = LossKind::HingeSecondOrder;
    c.kernel = Kernel::gaussian(width);
    c.lambda = lambda;
    c.schedule = StepSchedule::inverse_lambda_t(lambda);
    c.budget_pos = c.budget_neg = budget;
    return c;
}

double f_loop(const std::vector<SupportEntry>& es, const std::vector<double>& x, double width) {
    double s = 0.0;
    for (const auto& e : es) s += e.alpha * oracle::gauss(e.x.raw(), x, width);
    return s;
}

// ||alpha_j k_j - delta k_r||^2 expanded through the kernel.
double residual(double aj, const Vector& xj, double delta, const Vector& xr, double width) {
    const double kjj = oracle::gauss(xj.raw(), xj.raw(), width), krr = oracle::gauss(xr.raw(), xr.raw(), width);
    const double krj = oracle::gauss(xr.raw(), xj.raw(), width);
    return aj * aj * kjj - 2 * aj * delta * krj + delta * delta * krr;
}

// Minimizes the residual over delta by scanning then golden-section refinement.
double brute_min_residual(double aj, const Vector& xj, const Vector& xr, double width) {
    double lo = -4.0 * std::abs(aj) - 1.0, hi = 4.0 * std::abs(aj) + 1.0;
    double best = lo, best_v = residual(aj, xj, lo, xr, width);
    for (int i = 0; i <= 2000; ++i) {
        const double d = lo + (hi - lo) * i / 2000.0;
        const double v = residual(aj, xj, d, xr, width);
        if (v < best_v) best_v = v, best = d;
    }
    double a = best - (hi - lo) / 2000.0, b = best + (hi - lo) / 2000.0;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 200; ++it) {
        const double c = b - g * (b - a), d = a + g * (b - a);
        if (residual(aj, xj, c, xr, width) < residual(aj, xj, d, xr, width)) b = d;
        else a = c;
    }
    return residual(aj, xj, 0.5 * (a + b), xr, width);
}

}  // namespace

TEST(Kernel, EvaluationExamples) {
    KernelModel empty(hinge_kernel(1.0, 1.0, 10));
    EXPECT_EQ(empty.score(Vector{0.3, 0.2}), 0.0);

    SupportBuffer pos(5), neg(5);
    pos.push_back({1, Vector{0.5, -0.5}, 1.0});
    KernelModel one(hinge_kernel(1.0, 1.0, 5), pos, neg, 2, 0);
    EXPECT_DOUBLE_EQ(one.score(Vector{0.5, -0.5}), 1.0);

    std::mt19937_64 rng(30);
    SupportBuffer p2(10), n2(10);
    for (std::size_t i = 1; i <= 10; ++i)
        (i % 2 ? p2 : n2).push_back({i, oracle::randv(rng, 3), oracle::randn(rng, 1)[0]});
    KernelModel m(hinge_kernel(1.0, 0.8, 10), p2, n2, 11, 0);
    for (int k = 0; k < 20; ++k) {
        const auto x = oracle::randn(rng, 3);
        const double ref = f_loop(p2.entries(), x, 0.8) + f_loop(n2.entries(), x, 0.8);
        EXPECT_NEAR(m.score(Vector(x)), ref, 1e-12);
    }
}

TEST(Kernel, GaussianKernelValues) {
    const Kernel k = Kernel::gaussian(2.0);
    EXPECT_DOUBLE_EQ(k(Vector{1, 0}, Vector{1, 0}), 1.0);
    EXPECT_DOUBLE_EQ(k(Vector{0, 0}, Vector{2, 0}), std::exp(-1.0));
    EXPECT_THROW(Kernel::gaussian(0.0), std::invalid_argument);
}

TEST(Kernel, SingleComparisonHandEvaluation) {
    const double eta = 0.3;
    SupportBuffer cmp(5), own(5);
    cmp.push_back({1, Vector{0.1, 0.2}, 0.0});
    const auto upd = update_classifier(Kernel::gaussian(1.0), cmp, own, {Vector{0.4, -0.3}, 1},
                                       LossKind::HingeSecondOrder, 1.0, eta);
    ASSERT_TRUE(upd.has_value());
    EXPECT_EQ(upd->eval.mu_t, 0.0);
    EXPECT_EQ(upd->eval.sigma2_t, 0.0);
    EXPECT_EQ(upd->eval.b_t, 1.0);
    EXPECT_EQ(upd->eval.a_t, 1.0);
    EXPECT_EQ(upd->eval.psi_t, 1.0);
    EXPECT_DOUBLE_EQ(upd->incoming_alpha, eta);
    EXPECT_DOUBLE_EQ(cmp.entries()[0].alpha, -eta);
}

TEST(Kernel, EmptyComparisonSignalsSkip) {
    SupportBuffer cmp(5), own(5);
    EXPECT_FALSE(update_classifier(Kernel::gaussian(1.0), cmp, own, {Vector{0.0}, 1}, LossKind::HingeSecondOrder,
                                   1.0, 0.1)
                     .has_value());
}

TEST(Kernel, FullDecayReplacesPreviousWeights) {
    std::mt19937_64 rng(31);
    for (LossKind loss : {LossKind::HingeSecondOrder, LossKind::SquareSecondOrder}) {
        SupportBuffer cmp(5), own(5);
        cmp.push_back({1, oracle::randv(rng, 2), 0.7});
        own.push_back({2, oracle::randv(rng, 2), -0.4});
        own.push_back({3, oracle::randv(rng, 2), 0.9});
        const auto upd = update_classifier(Kernel::gaussian(1.0), cmp, own, {oracle::randv(rng, 2), -1}, loss, 2.0, 0.5);
        ASSERT_TRUE(upd.has_value());
        for (const auto& e : own.entries()) EXPECT_EQ(e.alpha, 0.0);
    }
}

TEST(Kernel, UpdateMatchesFunctionalGradientStep) {
    // f_new(x) = f(x) - eta [ lambda f(x) + dpsi/db * (-y)(k(x_t,x) - mean_i k(x_i,x))
    //                         + dpsi/dsigma2 * (2/n) sum_i (f_i - mu) k(x_i,x) ]
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> unit(0, 1);
    for (int c = 0; c < 100; ++c) {
        const LossKind loss = c % 2 ? LossKind::HingeSecondOrder : LossKind::SquareSecondOrder;
        const double width = 0.5 + 2 * unit(rng), lambda = 0.05 + unit(rng), eta = 0.05 + 0.5 * unit(rng);
        const int y = c % 3 ? 1 : -1;
        SupportBuffer cmp(10), own(10);
        std::size_t idx = 1;
        const std::size_t n_cmp = 1 + rng() % 5, n_own = rng() % 5;
        for (std::size_t i = 0; i < n_cmp; ++i) cmp.push_back({idx++, oracle::randv(rng, 2), oracle::randn(rng, 1)[0]});
        for (std::size_t i = 0; i < n_own; ++i) own.push_back({idx++, oracle::randv(rng, 2), oracle::randn(rng, 1)[0]});
        const LabeledInstance z{oracle::randv(rng, 2), y};

        std::vector<SupportEntry> all = cmp.entries();
        all.insert(all.end(), own.entries().begin(), own.entries().end());
        const auto f = [&](const std::vector<double>& x) { return f_loop(all, x, width); };
        const double n = static_cast<double>(n_cmp);
        std::vector<double> fi;
        double mu = 0, s2 = 0;
        for (const auto& e : cmp.entries()) fi.push_back(f(e.x.raw())), mu += fi.back() / n;
        for (double v : fi) s2 += (v - mu) * (v - mu) / n;
        const double b = 1 - y * (f(z.x.raw()) - mu);
        const double root = std::sqrt(b * b + s2);
        const double d_b = loss == LossKind::SquareSecondOrder ? b : 0.5 * (1 + b / root);
        const double d_s = loss == LossKind::SquareSecondOrder ? 0.5 : 0.25 / root;

        const auto upd = update_classifier(Kernel::gaussian(width), cmp, own, z, loss, lambda, eta);
        ASSERT_TRUE(upd.has_value());
        std::vector<SupportEntry> after = cmp.entries();
        after.insert(after.end(), own.entries().begin(), own.entries().end());
        after.push_back({idx, z.x, upd->incoming_alpha});

        for (int k = 0; k < 10; ++k) {
            const auto x = oracle::randn(rng, 2);
            double mean_k = 0, spread = 0;
            for (std::size_t i = 0; i < n_cmp; ++i) {
                const double ki = oracle::gauss(cmp.entries()[i].x.raw(), x, width);
                mean_k += ki / n;
                spread += (fi[i] - mu) * ki;
            }
            const double grad = lambda * f(x) - d_b * y * (oracle::gauss(z.x.raw(), x, width) - mean_k) +
                                d_s * 2.0 / n * spread;
            EXPECT_NEAR(f_loop(after, x, width), f(x) - eta * grad, 1e-9);
        }
    }
}

TEST(Kernel, BufferFifo) {
    SupportBuffer buf(2);
    const Kernel k = Kernel::gaussian(1.0);
    EXPECT_FALSE(update_buffer(buf, {1, Vector{0.0}, 0.5}, k).has_value());
    EXPECT_FALSE(update_buffer(buf, {2, Vector{1.0}, 0.5}, k).has_value());
    const auto ev = update_buffer(buf, {3, Vector{2.0}, 0.5}, k);
    ASSERT_TRUE(ev.has_value());
    EXPECT_EQ(ev->evicted_index, 1u);
    ASSERT_EQ(buf.size(), 2u);
    EXPECT_EQ(buf.entries()[0].index, 2u);
    EXPECT_EQ(buf.entries()[1].index, 3u);
    EXPECT_THROW(SupportBuffer(0), std::invalid_argument);
}

TEST(Kernel, SingleCandidateTransfer) {
    // Budget 1: the incoming instance is the only candidate, for either rule.
    for (EvictionRule rule : {EvictionRule::MinResidual, EvictionRule::MinAbsKernel}) {
        SupportBuffer buf(1);
        const Kernel k = Kernel::gaussian(1.5);
        buf.push_back({1, Vector{0.2, 0.1}, 0.8});
        const Vector xr{-0.3, 0.4};
        const auto ev = update_buffer(buf, {2, xr, 0.1}, k, rule);
        ASSERT_TRUE(ev.has_value());
        const double expected = 0.8 * oracle::gauss({-0.3, 0.4}, {0.2, 0.1}, 1.5);
        EXPECT_NEAR(ev->delta, expected, 1e-15);
        EXPECT_NEAR(buf.entries()[0].alpha, 0.1 + expected, 1e-15);
    }
}

TEST(Kernel, EvictionMatchesBruteForce) {
    std::mt19937_64 rng(33);
    for (int c = 0; c < 50; ++c) {
        SupportBuffer buf(3);
        std::vector<Vector> xs;
        for (std::size_t i = 1; i <= 3; ++i) {
            xs.push_back(oracle::randv(rng, 2));
            buf.push_back({i, xs.back(), oracle::randn(rng, 1)[0]});
        }
        const double aj = buf.entries()[0].alpha;
        const Vector incoming = oracle::randv(rng, 2);
        const auto ev = update_buffer(buf, {4, incoming, 0.0}, Kernel::gaussian(1.0));
        ASSERT_TRUE(ev.has_value());

        double best = std::numeric_limits<double>::infinity();
        for (const Vector& xr : {xs[1], xs[2], incoming}) best = std::min(best, brute_min_residual(aj, xs[0], xr, 1.0));
        EXPECT_NEAR(ev->residual, best, 1e-9);
        const Vector& chosen = ev->target_index == 4 ? incoming : xs[ev->target_index - 1];
        EXPECT_NEAR(residual(aj, xs[0], ev->delta, chosen, 1.0), best, 1e-9);
    }
}

TEST(Kernel, MinAbsKernelPicksSmallestKernelValue) {
    SupportBuffer buf(3);
    buf.push_back({1, Vector{0.0}, 1.0});
    buf.push_back({2, Vector{0.1}, 0.0});
    buf.push_back({3, Vector{2.0}, 0.0});
    const auto ev = update_buffer(buf, {4, Vector{0.5}, 0.0}, Kernel::gaussian(1.0), EvictionRule::MinAbsKernel);
    EXPECT_EQ(ev->target_index, 3u);
    SupportBuffer buf2(3);
    buf2.push_back({1, Vector{0.0}, 1.0});
    buf2.push_back({2, Vector{0.1}, 0.0});
    buf2.push_back({3, Vector{2.0}, 0.0});
    const auto ev2 = update_buffer(buf2, {4, Vector{0.5}, 0.0}, Kernel::gaussian(1.0), EvictionRule::MinResidual);
    EXPECT_EQ(ev2->target_index, 2u);
}

TEST(Kernel, SkipRoundThenUpdate) {
    KernelModel m(hinge_kernel(1.0, 1.0, 10));
    EXPECT_FALSE(m.step({Vector{0.1, 0.2}, 1}).has_value());
    EXPECT_EQ(m.positive_buffer().size(), 1u);
    EXPECT_EQ(m.positive_buffer().entries()[0].alpha, 0.0);
    const auto loss = m.step({Vector{-0.3, 0.1}, -1});
    ASSERT_TRUE(loss.has_value());
    EXPECT_EQ(m.gradient_rounds(), 1u);
    EXPECT_EQ(m.negative_buffer().size(), 1u);
    EXPECT_THROW(m.step({Vector{0.0, 0.0}, 2}), std::invalid_argument);
}

TEST(Kernel, BuffersRespectBudget) {
    const auto stream = gaussian_unit_ball_stream(400, 2, 34);
    KernelModel m(hinge_kernel(0.5, 1.0, 17));
    for (const auto& z : stream) {
        m.learn(z);
        ASSERT_LE(m.positive_buffer().size(), 17u);
        ASSERT_LE(m.negative_buffer().size(), 17u);
    }
    EXPECT_EQ(m.positive_buffer().size(), 17u);
    EXPECT_EQ(m.negative_buffer().size(), 17u);
}

TEST(Kernel, TwoMoonsNonlinearAdvantage) {
    const auto stream = two_moons(1000, 5, 0.1, 0.5, 0.75, 0.75);
    std::vector<int> y;
    for (const auto& z : stream) y.push_back(z.y);

    KernelModel km(hinge_kernel(0.01, 0.5, 100));
    for (const auto& z : stream) km.learn(z);
    std::vector<double> ks;
    for (const auto& z : stream) ks.push_back(km.score(z.x));
    EXPECT_GE(oracle::pair_auc(ks, y), 0.95);

    double best_linear = 0.0;
    for (double lambda : {1e-3, 1e-2, 0.1, 1.0}) {
        LinearModel lm(2, LinearConfig{LossKind::HingeSecondOrder, lambda, StepSchedule::inverse_lambda_t(lambda), false});
        for (const auto& z : stream) lm.step(z);
        std::vector<double> ls;
        for (const auto& z : stream) ls.push_back(lm.score(z.x));
        best_linear = std::max(best_linear, oracle::pair_auc(ls, y));
    }
    EXPECT_LE(best_linear, 0.90);
}

TEST(Kernel, NormBoundEveryRound) {
    const double lambda = 1.0;
    const auto stream = gaussian_unit_ball_stream(300, 2, 35, 0.4, 0.3, 0.5);
    KernelModel m(hinge_kernel(lambda, 0.5, 1000));
    for (const auto& z : stream) {
        m.step(z);
        ASSERT_LE(std::sqrt(m.rkhs_norm_sq()), (std::sqrt(2.0) + 0.5) / lambda);
    }
}

TEST(KernelRegret, SingleInstance) {
    const std::vector<LabeledInstance> one{{Vector{0.1}, -1}};
    const auto tr = kernel_regret_trace(one, hinge_kernel(1.0, 1.0, 10), {true, {}});
    EXPECT_TRUE(tr.round_losses.empty());
    EXPECT_TRUE(tr.cumulative_regret.empty());
    EXPECT_THROW(kernel_regret_trace(std::vector<LabeledInstance>{}, hinge_kernel(1.0, 1.0, 10)),
                 std::invalid_argument);
}

TEST(KernelRegret, OptimumMatchesIndependentMinimizer) {
    // Small stream; the learner's hindsight objective is rebuilt from the
    // definition and minimized by finite-difference gradient descent.
    const auto stream = gaussian_unit_ball_stream(16, 2, 36, 0.5);
    const double lambda = 1.0, width = 1.0;
    const auto tr = kernel_regret_trace(stream, hinge_kernel(lambda, width, 100));
    const std::size_t n = stream.size();
    oracle::Mat K(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) K[i][j] = oracle::gauss(stream[i].x.raw(), stream[j].x.raw(), width);
    std::vector<std::pair<std::size_t, std::vector<std::size_t>>> rounds;
    for (std::size_t t = 0; t < n; ++t) {
        std::vector<std::size_t> opp;
        for (std::size_t s = 0; s < t; ++s)
            if (stream[s].y != stream[t].y) opp.push_back(s);
        if (!opp.empty()) rounds.emplace_back(t, opp);
    }
    ASSERT_EQ(rounds.size(), tr.round_losses.size());
    const auto objective = [&](const std::vector<double>& beta) {
        std::vector<double> f(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) f[i] += K[i][j] * beta[j];
        const double reg = 0.5 * lambda * oracle::dot(beta, f);
        double s = 0.0;
        for (const auto& [t, opp] : rounds) {
            double mu = 0, s2 = 0;
            for (auto i : opp) mu += f[i] / opp.size();
            for (auto i : opp) s2 += (f[i] - mu) * (f[i] - mu) / opp.size();
            s += reg + oracle::psi_m(stream[t].y * (f[t] - mu), s2);
        }
        return s;
    };
    std::vector<double> beta(n, 0.0);
    for (int it = 0; it < 20000; ++it) {
        const auto g = oracle::fd_gradient(objective, beta, 1e-6);
        for (std::size_t i = 0; i < n; ++i) beta[i] -= 0.002 * g[i];
    }
    const double ref = objective(beta);
    EXPECT_LE(tr.batch_optimum_loss, ref + 1e-7);
    EXPECT_NEAR(tr.batch_optimum_loss, ref, 1e-4 * std::max(1.0, ref));
}

TEST(KernelRegret, WithinBoundAndSublinear) {
    const double lambda = 1.0;
    const auto stream = gaussian_unit_ball_stream(500, 2, 9);
    RegretOptions ro;
    ro.every_round = true;
    const auto cfg = hinge_kernel(lambda, 0.5, 500);
    ASSERT_TRUE(unbounded_buffers(stream, cfg));
    const auto tr = kernel_regret_trace(stream, cfg, ro);
    for (std::size_t r = 0; r < tr.cumulative_regret.size(); ++r)
        ASSERT_LE(tr.cumulative_regret[r], kernel_regret_bound(r + 1, lambda)) << "round " << r + 1;
    auto per_round = [&](std::size_t horizon) {
        std::size_t last = 0;
        while (last < tr.round_positions.size() && tr.round_positions[last] <= horizon) ++last;
        return tr.cumulative_regret[last - 1] / static_cast<double>(horizon);
    };
    EXPECT_LT(per_round(250), per_round(125));
    EXPECT_LT(per_round(500), per_round(250));
}

TEST(KernelRegret, FiniteBufferStillConsistent) {
    // With a small budget the comparison sets are the buffers actually used.
    const auto stream = gaussian_unit_ball_stream(120, 2, 37);
    const auto tr = kernel_regret_trace(stream, hinge_kernel(1.0, 0.7, 8), {true, {}});
    ASSERT_FALSE(tr.cumulative_regret.empty());
    // f = 0 scores 1 on every hinge round.
    EXPECT_LE(tr.batch_optimum_loss, static_cast<double>(tr.round_losses.size()));
    EXPECT_TRUE(tr.solver.converged);
}

TEST(KernelLearner, CachedGramMatchesDirectEvaluation) {
    // Replays the model's round with direct kernel evaluation.
    const auto stream = two_moons(400, 31);
    KernelConfig cfg;
    cfg.kernel = Kernel::gaussian(0.7);
    cfg.lambda = 0.5;
    cfg.schedule = StepSchedule::inverse_lambda_t(0.5);
    cfg.budget_pos = 7;
    cfg.budget_neg = 11;
    for (LossKind loss : {LossKind::HingeSecondOrder, LossKind::SquareSecondOrder}) {
        cfg.loss = loss;
        KernelModel model(cfg);
        SupportBuffer pos(7), neg(11);
        std::size_t t = 1, rounds = 0;
        for (const auto& z : stream) {
            model.learn(z);
            SupportBuffer& cmp = z.y == 1 ? neg : pos;
            SupportBuffer& same = z.y == 1 ? pos : neg;
            double a = 0.0;
            if (!cmp.empty()) {
                a = update_classifier(cfg.kernel, cmp, same, z, loss, cfg.lambda, cfg.schedule.eta(++rounds))
                        ->incoming_alpha;
            }
            update_buffer(same, {t++, z.x, a}, cfg.kernel);
        }
        for (const auto& [mine, theirs] : {std::pair{&model.positive_buffer(), &pos}, {&model.negative_buffer(), &neg}}) {
            ASSERT_EQ(mine->size(), theirs->size());
            for (std::size_t i = 0; i < mine->size(); ++i) {
                EXPECT_EQ(mine->entries()[i].index, theirs->entries()[i].index);
                EXPECT_EQ(mine->entries()[i].alpha, theirs->entries()[i].alpha);
            }
        }
    }
}
