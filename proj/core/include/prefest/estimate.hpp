#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "prefest/likelihood.hpp"

namespace prefest {

struct OptimizerConfig {
    int max_iterations = 300;
    double gradient_tolerance = 1.0;  // max-norm of the total-logL gradient
    double step_tolerance = 1e-9;     // relative step size
    double fd_step = 1e-6;
    int newton_polish_rounds = 2;     // FD-Hessian refinement after BFGS stalls
    unsigned seed = 0;                // multistart jitter
    int multistarts = 0;
};

struct EstimateResult {
    Eigen::VectorXd beta_hat;
    Eigen::MatrixXd vcov_clustered;
    Eigen::VectorXd std_errors;
    double log_likelihood = 0.0;
    double bic = 0.0;
    int n_choices = 0;
    int n_respondents = 0;
    int n_params = 0;
    bool converged = false;
    bool at_boundary = false;
    int iterations = 0;
    double gradient_norm = 0.0;
    std::vector<std::string> labels;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Central differences, component step fd_step * max(1, |beta_i|). A
/// non-finite objective at a perturbed point shrinks the step once, then
/// fails. Symmetric kinks (|x| at 0) return 0.
Eigen::VectorXd numeric_gradient(const Objective& f, const Eigen::VectorXd& beta, double fd_step);

/// Central-difference Hessian of f at beta.
Eigen::MatrixXd numeric_hessian(const Objective& f, const Eigen::VectorXd& beta, double fd_step);

/// BFGS ascent with backtracking line search; steps leaving the feasible
/// region score -inf and are rejected. Near convergence the inverse Hessian
/// is refreshed from finite differences (Newton polish). Runs the clustered
/// covariance at the optimum unless compute_vcov is false.
EstimateResult maximize(const LikelihoodEvaluator& eval, const Eigen::VectorXd& init,
                        const OptimizerConfig& cfg = {}, bool compute_vcov = true);

/// Two-stage fit for covariate designs: intercept-only model first, then the
/// full design warm-started from those intercepts with covariate
/// coefficients at zero. Falls back to plain maximize for empty designs.
EstimateResult maximize_staged(const ChoiceDataset& data, const ModelSpec& spec,
                               const CovariateDesign& design, const OptimizerConfig& cfg = {},
                               int n_threads = 1);

/// Sandwich H^-1 (sum_j s_j s_j^T) H^-1 with respondent-level scores from
/// finite differences and the small-sample factor G/(G-1).
Eigen::MatrixXd clustered_vcov(const LikelihoodEvaluator& eval, const Eigen::VectorXd& beta_hat,
                               double fd_step = 1e-6);

struct WaldResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int dof = 0;
};

/// Tests R beta = r against chi-square with rank(R) degrees of freedom.
WaldResult wald_test(const EstimateResult& result, const Eigen::MatrixXd& R,
                     const Eigen::VectorXd& r);

double bic(double log_likelihood, int n_params, int n_choices);

/// Upper tail of the chi-square distribution.
double chi_squared_sf(double x, int dof);

/// Default starting point: aggregate point estimates for the intercepts,
/// zero for covariate coefficients.
Eigen::VectorXd default_init(const ModelSpec& spec, const CovariateDesign& design);

}  // namespace prefest
