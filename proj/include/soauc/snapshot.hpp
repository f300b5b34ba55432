#pragma once

// JSON snapshots of trained models. Doubles are written in shortest
// round-trip form, so save -> load reproduces the model bit for bit.

#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "soauc/kernel_learner.hpp"
#include "soauc/learners.hpp"
#include "soauc/linear_learner.hpp"
#include "soauc/moments.hpp"

namespace soauc {

using json = nlohmann::json;

namespace snapshot_detail {

inline json to_json(const Vector& v) { return v.raw(); }
inline Vector vector_from(const json& j) { return Vector(j.get<std::vector<double>>()); }

inline json to_json(const StepSchedule& s) {
    json j{{"rule", s.name()}};
    std::visit(
        [&](const auto& r) {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, ConstantStep>) {
                j["eta"] = r.eta;
            } else if constexpr (std::is_same_v<T, InverseLambdaT>) {
                j["lambda"] = r.lambda;
            } else {
                j["lambda"] = r.lambda;
                j["horizon"] = r.horizon;
                j["l_star"] = r.l_star;
            }
        },
        s.rule());
    return j;
}

inline StepSchedule schedule_from(const json& j) {
    const auto rule = j.at("rule").get<std::string>();
    if (rule == "constant") return StepSchedule::constant(j.at("eta").get<double>());
    if (rule == "inverse-lambda-t") return StepSchedule::inverse_lambda_t(j.at("lambda").get<double>());
    if (rule == "horizon-tuned")
        return StepSchedule::horizon_tuned(j.at("lambda").get<double>(), j.at("horizon").get<std::size_t>(),
                                         j.at("l_star").get<double>());
    throw std::invalid_argument("snapshot: unknown step rule '" + rule + "'");
}

inline LossKind loss_from(const std::string& s) {
    if (s == to_string(LossKind::SquareSecondOrder)) return LossKind::SquareSecondOrder;
    if (s == to_string(LossKind::HingeSecondOrder)) return LossKind::HingeSecondOrder;
    throw std::invalid_argument("snapshot: unknown loss '" + s + "'");
}

inline json to_json(const ClassMoments& m) {
    return {{"count", m.count()},
            {"mean", to_json(m.mean())},
            {"cov", std::vector<double>(m.cov().values().begin(), m.cov().values().end())},
            {"roundoff_scale", m.cov().roundoff_scale()}};
}

inline ClassMoments moments_from(const json& j) {
    Vector mean = vector_from(j.at("mean"));
    const auto cov = j.at("cov").get<std::vector<double>>();
    const std::size_t p = mean.size();
    if (cov.size() != p * p) throw std::invalid_argument("snapshot: covariance size mismatch");
    SymMatrix m(p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t k = i; k < p; ++k) m.set(i, k, cov[i * p + k]);
    return ClassMoments(j.at("count").get<std::size_t>(), std::move(mean), std::move(m),
                        j.at("roundoff_scale").get<double>());
}

inline json to_json(const SupportBuffer& b) {
    json entries = json::array();
    for (const auto& e : b.entries()) entries.push_back({{"index", e.index}, {"x", to_json(e.x)}, {"alpha", e.alpha}});
    return {{"budget", b.budget()}, {"entries", entries}};
}

inline SupportBuffer buffer_from(const json& j) {
    SupportBuffer b(j.at("budget").get<std::size_t>());
    for (const auto& e : j.at("entries"))
        b.push_back({e.at("index").get<std::size_t>(), vector_from(e.at("x")), e.at("alpha").get<double>()});
    return b;
}

}  // namespace snapshot_detail

inline json to_json(const LinearModel& m) {
    using namespace snapshot_detail;
    return {{"model", "linear"},
            {"loss", to_string(m.config().loss)},
            {"lambda", m.config().lambda},
            {"schedule", to_json(m.config().schedule)},
            {"step_with_empty_history", m.config().step_with_empty_history},
            {"w", to_json(m.weights())},
            {"t", m.t()},
            {"gradient_rounds", m.gradient_rounds()},
            {"positive", to_json(m.positive_moments())},
            {"negative", to_json(m.negative_moments())}};
}

inline json to_json(const KernelModel& m) {
    using namespace snapshot_detail;
    const auto& c = m.config();
    return {{"model", "kernel"},
            {"loss", to_string(c.loss)},
            {"kernel", c.kernel.is_gaussian() ? json{{"type", "gaussian"}, {"width", c.kernel.width()}}
                                              : json{{"type", "linear"}}},
            {"lambda", c.lambda},
            {"schedule", to_json(c.schedule)},
            {"eviction", c.eviction == EvictionRule::MinResidual ? "min_residual" : "paper_literal"},
            {"positive", to_json(m.positive_buffer())},
            {"negative", to_json(m.negative_buffer())},
            {"t", m.t()},
            {"gradient_rounds", m.gradient_rounds()}};
}

inline json to_json(const BaselineModel& m) {
    return {{"model", m.kind() == BaselineKind::Perceptron ? "perceptron" : "pa1"},
            {"c", m.c()},
            {"w", snapshot_detail::to_json(m.weights())}};
}

inline json to_json(const TrainedModel& m) {
    return std::visit([](const auto& v) { return to_json(v); }, m.variant());
}

inline TrainedModel model_from_json(const json& j) {
    using namespace snapshot_detail;
    const auto kind = j.at("model").get<std::string>();
    if (kind == "linear") {
        LinearConfig cfg{loss_from(j.at("loss").get<std::string>()), j.at("lambda").get<double>(),
                         schedule_from(j.at("schedule")), j.at("step_with_empty_history").get<bool>()};
        return TrainedModel(LinearModel(std::move(cfg), vector_from(j.at("w")), j.at("t").get<std::size_t>(),
                                        j.at("gradient_rounds").get<std::size_t>(), moments_from(j.at("positive")),
                                        moments_from(j.at("negative"))));
    }
    if (kind == "kernel") {
        const auto& k = j.at("kernel");
        const auto ktype = k.at("type").get<std::string>();
        if (ktype != "gaussian" && ktype != "linear")
            throw std::invalid_argument("snapshot: unknown kernel '" + ktype + "'");
        const auto ev = j.at("eviction").get<std::string>();
        if (ev != "min_residual" && ev != "paper_literal")
            throw std::invalid_argument("snapshot: unknown eviction rule '" + ev + "'");
        auto pos = buffer_from(j.at("positive"));
        auto neg = buffer_from(j.at("negative"));
        KernelConfig cfg{loss_from(j.at("loss").get<std::string>()),
                         ktype == "gaussian" ? Kernel::gaussian(k.at("width").get<double>()) : Kernel::linear(),
                         j.at("lambda").get<double>(),
                         schedule_from(j.at("schedule")),
                         pos.budget(),
                         neg.budget(),
                         ev == "min_residual" ? EvictionRule::MinResidual : EvictionRule::MinAbsKernel};
        return TrainedModel(KernelModel(std::move(cfg), std::move(pos), std::move(neg), j.at("t").get<std::size_t>(),
                                        j.at("gradient_rounds").get<std::size_t>()));
    }
    if (kind == "perceptron" || kind == "pa1") {
        return TrainedModel(BaselineModel(kind == "perceptron" ? BaselineKind::Perceptron
                                                                : BaselineKind::PassiveAggressiveI,
                                          j.at("c").get<double>(), vector_from(j.at("w"))));
    }
    throw std::invalid_argument("snapshot: unknown model '" + kind + "'");
}

}  // namespace soauc
