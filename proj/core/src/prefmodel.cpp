#include "prefest/prefmodel.hpp"

#include <cmath>

namespace prefest {

namespace {

double crra_branch(double x, double curvature) {
    // x > 0
    return std::pow(x, 1.0 - curvature) / (1.0 - curvature);
}

}  // namespace

double utility(double x, const ParamVector& p, UtilityFamily family) {
    switch (family) {
        case UtilityFamily::Crra: {
            if (std::abs(1.0 - p.alpha) < 1e-12)
                throw UnsupportedCurvature("alpha = 1 is excluded for CRRA");
            if (x == 0.0) return 0.0;
            if (x > 0.0) return crra_branch(x, p.alpha);
            return -p.lambda * crra_branch(-x, p.alpha);
        }
        case UtilityFamily::CrraEps: {
            if (std::abs(1.0 - p.alpha) < 1e-12)
                throw UnsupportedCurvature("alpha = 1 is excluded for CRRA");
            const double e = p.eps_norm;
            const double one_m_a = 1.0 - p.alpha;
            const double base = std::pow(e, one_m_a);
            if (x >= 0.0) return (std::pow(x + e, one_m_a) - base) / one_m_a;
            return -p.lambda * (std::pow(-x + e, one_m_a) - base) / one_m_a;
        }
        case UtilityFamily::Cara: {
            if (p.phi == 0.0) throw UnsupportedCurvature("phi = 0 is excluded for CARA");
            if (x >= 0.0) return (1.0 - std::exp(-p.phi * x)) / p.phi;
            return -p.lambda * (1.0 - std::exp(p.phi * x)) / p.phi;
        }
        case UtilityFamily::DualCurvature: {
            // lambda fixed to 1
            if (std::abs(1.0 - p.alpha_plus) < 1e-12 || std::abs(1.0 - p.alpha_minus) < 1e-12)
                throw UnsupportedCurvature("unit curvature is excluded");
            if (x == 0.0) return 0.0;
            if (x > 0.0) return crra_branch(x, p.alpha_plus);
            return -crra_branch(-x, p.alpha_minus);
        }
    }
    return 0.0;
}

double discount_factor(double t, const ParamVector& p, DiscountForm disc, double frontend_delay) {
    switch (disc) {
        case DiscountForm::None:
            return 1.0;
        case DiscountForm::QuasiHyperbolic: {
            double d = std::pow(1.0 + p.delta, -t);
            if (t > frontend_delay) d /= 1.0 + p.gamma;
            return d;
        }
        case DiscountForm::Exponential:
            return std::pow(1.0 + p.delta, -t);
        case DiscountForm::TwoRates: {
            double near = std::min(t, 0.5);
            double far = std::max(t - 0.5, 0.0);
            return std::pow(1.0 + p.delta, -near) * std::pow(1.0 + p.delta2, -far);
        }
    }
    return 1.0;
}

double option_value(const Option& opt, const ParamVector& p, UtilityFamily family,
                    DiscountForm disc, double frontend_delay) {
    double v = 0.0;
    for (const auto& o : opt.outcomes)
        v += o.probability * discount_factor(o.time, p, disc, frontend_delay) *
             utility(o.amount, p, family);
    return v;
}

double certainty_equivalent(const Option& lottery, double alpha) {
    if (alpha >= 1.0) throw UnsupportedCurvature("certainty equivalent requires alpha < 1");
    double eu = 0.0;
    for (const auto& o : lottery.outcomes) {
        if (o.amount < 0.0 || o.time != 0.0)
            throw Error("certainty_equivalent expects an atemporal gain lottery");
        if (o.amount > 0.0) eu += o.probability * crra_branch(o.amount, alpha);
    }
    return std::pow((1.0 - alpha) * eu, 1.0 / (1.0 - alpha));
}

double risk_premium(const Option& lottery, double alpha) {
    double ev = 0.0;
    for (const auto& o : lottery.outcomes) ev += o.probability * o.amount;
    return ev - certainty_equivalent(lottery, alpha);
}

Option benchmark_lottery() {
    return Option{{Outcome{0.0, 0.5, 0.0}, Outcome{100.0, 0.5, 0.0}}};
}

}  // namespace prefest
