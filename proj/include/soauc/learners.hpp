#pragma once

// Algorithm registry: names, hyperparameters, and one-pass training of any of
// the supported learners behind a common scoring interface.

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "soauc/data.hpp"
#include "soauc/kernel_learner.hpp"
#include "soauc/linear_learner.hpp"
#include "soauc/schedule.hpp"

namespace soauc {

enum class Algorithm { OaucS, OaucM, OaucMConst, OkaucS, OkaucM, Perceptron, PassiveAggressive };

inline const char* to_string(Algorithm a) noexcept {
    switch (a) {
        case Algorithm::OaucS: return "oauc-s";
        case Algorithm::OaucM: return "oauc-m";
        case Algorithm::OaucMConst: return "oauc-m-const";
        case Algorithm::OkaucS: return "okauc-s";
        case Algorithm::OkaucM: return "okauc-m";
        case Algorithm::Perceptron: return "perceptron";
        case Algorithm::PassiveAggressive: return "pa1";
    }
    return "?";
}

inline Algorithm parse_algorithm(std::string_view s) {
    for (auto a : {Algorithm::OaucS, Algorithm::OaucM, Algorithm::OaucMConst, Algorithm::OkaucS, Algorithm::OkaucM,
                   Algorithm::Perceptron, Algorithm::PassiveAggressive})
        if (s == to_string(a)) return a;
    throw std::invalid_argument("unknown algorithm '" + std::string(s) + "'");
}

inline bool is_kernel(Algorithm a) noexcept { return a == Algorithm::OkaucS || a == Algorithm::OkaucM; }
inline bool is_baseline(Algorithm a) noexcept {
    return a == Algorithm::Perceptron || a == Algorithm::PassiveAggressive;
}
inline LossKind loss_of(Algorithm a) noexcept {
    return a == Algorithm::OaucS || a == Algorithm::OkaucS ? LossKind::SquareSecondOrder : LossKind::HingeSecondOrder;
}

enum class ScheduleChoice { Default, Constant, InverseLambdaT, HorizonTuned };

inline const char* to_string(ScheduleChoice s) noexcept {
    switch (s) {
        case ScheduleChoice::Default: return "default";
        case ScheduleChoice::Constant: return "constant";
        case ScheduleChoice::InverseLambdaT: return "inverse-lambda-t";
        case ScheduleChoice::HorizonTuned: return "horizon-tuned";
    }
    return "?";
}

inline ScheduleChoice parse_schedule_choice(std::string_view s) {
    for (auto c : {ScheduleChoice::Default, ScheduleChoice::Constant, ScheduleChoice::InverseLambdaT,
                   ScheduleChoice::HorizonTuned})
        if (s == to_string(c)) return c;
    throw std::invalid_argument("unknown schedule '" + std::string(s) + "'");
}

/// Tunable values; which of them an algorithm reads is given by uses_*().
struct Hyperparams {
    double lambda = 1.0;
    double eta = 1.0;
    double kernel_width = 1.0;
    double c = 1.0;

    bool operator==(const Hyperparams&) const = default;
};

/// Fixed (non-tuned) settings of an algorithm.
struct AlgorithmSettings {
    Algorithm algorithm = Algorithm::OaucM;
    ScheduleChoice schedule = ScheduleChoice::Default;
    /// HorizonTuned only.
    std::size_t horizon = 0;
    double l_star = 0.0;
    std::size_t budget_pos = 100;
    std::size_t budget_neg = 100;
    EvictionRule eviction = EvictionRule::MinResidual;
    bool step_with_empty_history = false;
};

/// oauc-m and okauc-m default to 1/(lambda t); the others to a tuned constant.
inline ScheduleChoice effective_schedule(const AlgorithmSettings& s) noexcept {
    if (s.schedule != ScheduleChoice::Default) return s.schedule;
    return s.algorithm == Algorithm::OaucM || s.algorithm == Algorithm::OkaucM ? ScheduleChoice::InverseLambdaT
                                                                               : ScheduleChoice::Constant;
}

inline bool uses_lambda(const AlgorithmSettings& s) noexcept { return !is_baseline(s.algorithm); }
inline bool uses_eta(const AlgorithmSettings& s) noexcept {
    return !is_baseline(s.algorithm) && effective_schedule(s) == ScheduleChoice::Constant;
}
inline bool uses_width(const AlgorithmSettings& s) noexcept { return is_kernel(s.algorithm); }
inline bool uses_c(const AlgorithmSettings& s) noexcept { return s.algorithm == Algorithm::PassiveAggressive; }

inline StepSchedule make_schedule(const AlgorithmSettings& s, const Hyperparams& h) {
    switch (effective_schedule(s)) {
        case ScheduleChoice::Constant: return StepSchedule::constant(h.eta);
        case ScheduleChoice::HorizonTuned: return StepSchedule::horizon_tuned(h.lambda, s.horizon, s.l_star);
        default: return StepSchedule::inverse_lambda_t(h.lambda);
    }
}

inline LinearConfig make_linear_config(const AlgorithmSettings& s, const Hyperparams& h) {
    return LinearConfig{loss_of(s.algorithm), h.lambda, make_schedule(s, h), s.step_with_empty_history};
}

inline KernelConfig make_kernel_config(const AlgorithmSettings& s, const Hyperparams& h) {
    return KernelConfig{loss_of(s.algorithm), Kernel::gaussian(h.kernel_width), h.lambda, make_schedule(s, h),
                        s.budget_pos, s.budget_neg, s.eviction};
}

/// Any trained learner.
class TrainedModel {
public:
    using Variant = std::variant<LinearModel, KernelModel, BaselineModel>;

    explicit TrainedModel(Variant m) : model_(std::move(m)) {}

    double score(const Vector& x) const {
        return std::visit([&](const auto& m) { return m.score(x); }, model_);
    }

    std::vector<double> scores(std::span<const LabeledInstance> data) const {
        std::vector<double> out;
        out.reserve(data.size());
        for (const auto& z : data) out.push_back(score(z.x));
        return out;
    }

    const Variant& variant() const noexcept { return model_; }
    Variant& variant() noexcept { return model_; }

private:
    Variant model_;
};

inline TrainedModel make_model(const AlgorithmSettings& s, const Hyperparams& h, std::size_t dim) {
    if (is_kernel(s.algorithm)) return TrainedModel(KernelModel(make_kernel_config(s, h)));
    if (s.algorithm == Algorithm::Perceptron) return TrainedModel(BaselineModel(dim, BaselineKind::Perceptron));
    if (s.algorithm == Algorithm::PassiveAggressive)
        return TrainedModel(BaselineModel(dim, BaselineKind::PassiveAggressiveI, h.c));
    return TrainedModel(LinearModel(dim, make_linear_config(s, h)));
}

/// One pass over `stream` in the given order.
inline TrainedModel train_one_pass(const AlgorithmSettings& s, const Hyperparams& h,
                                   std::span<const LabeledInstance> stream, std::size_t dim) {
    auto model = make_model(s, h, dim);
    std::visit(
        [&](auto& m) {
            using M = std::decay_t<decltype(m)>;
            for (const auto& z : stream) {
                if constexpr (std::is_same_v<M, KernelModel>) m.learn(z);
                else m.step(z);
            }
        },
        model.variant());
    return model;
}

}  // namespace soauc
