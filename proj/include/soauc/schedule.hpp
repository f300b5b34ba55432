#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <variant>

namespace soauc {

struct ConstantStep {
    double eta = 0.1;
};

/// eta_t = 1 / (lambda t)
struct InverseLambdaT {
    double lambda = 1.0;
};

/// Constant eta = 1 / (4 + lambda + sqrt((4 + lambda)^2 + (4 + lambda) lambda T L*)),
/// the step size tuned to a known horizon T and optimal cumulative loss L*.
struct HorizonTunedStep {
    double lambda = 1.0;
    std::size_t horizon = 1;
    double l_star = 0.0;
};

class StepSchedule {
public:
    using Rule = std::variant<ConstantStep, InverseLambdaT, HorizonTunedStep>;

    StepSchedule() : rule_(ConstantStep{}) {}
    StepSchedule(Rule rule) : rule_(rule) { validate(); }  // NOLINT: implicit by intent

    static StepSchedule constant(double eta) { return StepSchedule(ConstantStep{eta}); }
    static StepSchedule inverse_lambda_t(double lambda) { return StepSchedule(InverseLambdaT{lambda}); }
    static StepSchedule horizon_tuned(double lambda, std::size_t horizon, double l_star) {
        return StepSchedule(HorizonTunedStep{lambda, horizon, l_star});
    }

    const Rule& rule() const noexcept { return rule_; }

    /// Step size for the round-th gradient step, round >= 1.
    double eta(std::size_t round) const {
        if (round == 0) throw std::invalid_argument("StepSchedule::eta: rounds start at 1");
        return std::visit(
            [round](const auto& r) -> double {
                using T = std::decay_t<decltype(r)>;
                if constexpr (std::is_same_v<T, ConstantStep>) {
                    return r.eta;
                } else if constexpr (std::is_same_v<T, InverseLambdaT>) {
                    return 1.0 / (r.lambda * static_cast<double>(round));
                } else {
                    const double a = 4.0 + r.lambda;
                    return 1.0 / (a + std::sqrt(a * a + a * r.lambda * static_cast<double>(r.horizon) * r.l_star));
                }
            },
            rule_);
    }

    std::string name() const {
        switch (rule_.index()) {
            case 0: return "constant";
            case 1: return "inverse-lambda-t";
            default: return "horizon-tuned";
        }
    }

private:
    void validate() const {
        std::visit(
            [](const auto& r) {
                using T = std::decay_t<decltype(r)>;
                if constexpr (std::is_same_v<T, ConstantStep>) {
                    if (!(r.eta > 0.0)) throw std::invalid_argument("constant step: eta must be > 0");
                } else if constexpr (std::is_same_v<T, InverseLambdaT>) {
                    if (!(r.lambda > 0.0)) throw std::invalid_argument("1/(lambda t) step: lambda must be > 0");
                } else {
                    if (!(r.lambda > 0.0)) throw std::invalid_argument("tuned step: lambda must be > 0");
                    if (!(r.l_star >= 0.0)) throw std::invalid_argument("tuned step: l_star must be >= 0");
                    if (r.horizon == 0) throw std::invalid_argument("tuned step: horizon must be >= 1");
                }
            },
            rule_);
    }

    Rule rule_;
};

}  // namespace soauc
