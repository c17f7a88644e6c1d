#pragma once

#include "prefest/errors.hpp"
#include "prefest/mpl.hpp"

namespace prefest {

enum class UtilityFamily { Crra, CrraEps, Cara, DualCurvature };
enum class DiscountForm { QuasiHyperbolic, Exponential, TwoRates, None };

/// The structural parameters. The base six are (alpha, lambda, delta, gamma,
/// kappa, mu); the remaining slots back the robustness variants and are
/// ignored by specifications that do not use them. mu doubles as mu1 when the
/// Fechner scale varies per list. delta doubles as the near-horizon rate
/// delta1 under the two-rate discount form.
struct ParamVector {
    double alpha = 0.0;
    double lambda = 1.0;
    double delta = 0.0;
    double gamma = 0.0;
    double kappa = 0.0;
    double mu = 1.0;

    double alpha_plus = 0.0;
    double alpha_minus = 0.0;
    double phi = 0.0;
    double delta2 = 0.0;
    double mu2 = 1.0;
    double mu3 = 1.0;
    double eps_norm = 0.001;
};

double utility(double x, const ParamVector& p, UtilityFamily family);

/// Discount factor applied to a payoff at time t (years). The present-bias
/// factor 1/(1+gamma) applies iff t > frontend_delay: payoffs at or before
/// the front-end delay count as "present". Two-rate discounting splits the
/// horizon at 0.5 years.
double discount_factor(double t, const ParamVector& p, DiscountForm disc, double frontend_delay);

double option_value(const Option& opt, const ParamVector& p, UtilityFamily family,
                    DiscountForm disc, double frontend_delay);

/// CE of an atemporal gain lottery under CRRA with coefficient alpha < 1.
double certainty_equivalent(const Option& lottery, double alpha);

/// Expected value minus certainty equivalent for the same lottery.
double risk_premium(const Option& lottery, double alpha);

/// The 50/50 lottery over 0 and 100.
Option benchmark_lottery();

}  // namespace prefest
