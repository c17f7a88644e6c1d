#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "prefest/mpl.hpp"
#include "prefest/prefmodel.hpp"

namespace prefest {

enum class LinkFunction { Logit, Probit };

/// F(z): logistic or standard normal CDF. F(0)=0.5, F(-z)=1-F(z).
double link_cdf(double z, LinkFunction link);

struct ErrorStructure {
    bool tremble = true;
    bool fechner_per_list = false;  // mu1 for MPL1.1/1.2, mu2 for MPL2, mu3 for MPL3
};

struct ModelSpec {
    UtilityFamily family = UtilityFamily::Crra;
    DiscountForm disc = DiscountForm::QuasiHyperbolic;
    LinkFunction link = LinkFunction::Logit;
    ErrorStructure errors;
    /// Restrict to the time lists with alpha pinned at 0 (identifies delta,
    /// gamma and the error terms only).
    bool time_only = false;
};

/// Names of the structural parameters a spec estimates, in reporting order.
std::vector<std::string> param_names(const ModelSpec& spec);

/// Per structural parameter, the covariate columns entering its linear index.
/// Coefficients are laid out parameter-major: for each parameter, intercept
/// first, then one slot per covariate.
struct CovariateDesign {
    std::map<std::string, std::vector<std::string>> covariates;

    const std::vector<std::string>& covariates_for(const std::string& param) const;
    int coefficient_count(const ModelSpec& spec) const;
    std::vector<std::string> coefficient_labels(const ModelSpec& spec) const;
};

struct Choice {
    ListId list = ListId::MPL1_1;
    int row = 0;  // 1-based
    bool chose_b = false;
};

struct Respondent {
    std::string id;
    std::vector<double> covariates;  // aligned with ChoiceDataset::covariate_names
    double stake_factor = 1.0;
    double currency_multiplier = 1.0;
    std::vector<Choice> choices;
};

struct ChoiceDataset {
    std::vector<std::string> covariate_names;
    std::vector<Respondent> respondents;

    int n_choices() const;
    double covariate(const Respondent& r, int index) const { return r.covariates[index]; }
    int covariate_index(const std::string& name) const;  // -1 if absent
};

/// Evaluates the linear index for each structural parameter of `spec`.
ParamVector params_for(const ChoiceDataset& data, const Respondent& r,
                       const Eigen::VectorXd& beta, const ModelSpec& spec,
                       const CovariateDesign& design);

/// Throws InfeasibleParameters on a parameter outside the model's domain.
void check_feasible(const ParamVector& p, const ModelSpec& spec, const std::string& respondent_id);

double prob_b(double delta_u, double kappa, double mu, LinkFunction link, bool tremble);

/// Exponential-ratio (Luce) form, overflow-safe; algebraically identical to
/// the logit-link tremble probability.
double prob_b_luce(double u_a, double u_b, double kappa, double mu);

/// Difference in valuation U_B - U_A for one row under a respondent's
/// parameters. Risk/loss lists are valued atemporally; time lists through the
/// discount form with the list's front-end delay.
double delta_utility(const MplRow& row, ListId list, const ParamVector& p, const ModelSpec& spec,
                     double stake_factor);

class LikelihoodEvaluator {
public:
    LikelihoodEvaluator(const ChoiceDataset& data, ModelSpec spec, CovariateDesign design,
                        int n_threads = 1);

    /// Total log-likelihood. Per-respondent terms are computed in fixed blocks
    /// and reduced in block order, so repeated runs are bit-identical.
    double log_likelihood(const Eigen::VectorXd& beta) const;

    /// As log_likelihood but returns -inf on InfeasibleParameters (for line
    /// search step rejection).
    double log_likelihood_or_neg_inf(const Eigen::VectorXd& beta) const;

    /// One log-likelihood term per respondent, in dataset order.
    Eigen::VectorXd per_respondent(const Eigen::VectorXd& beta) const;

    /// Per-choice B-probabilities for one respondent, in choice order.
    std::vector<double> choice_probabilities(const Respondent& r, const Eigen::VectorXd& beta) const;

    const ModelSpec& spec() const { return spec_; }
    const CovariateDesign& design() const { return design_; }
    const ChoiceDataset& data() const { return *data_; }
    int n_coefficients() const { return n_coef_; }

private:
    double respondent_term(const Respondent& r, const Eigen::VectorXd& beta) const;

    const ChoiceDataset* data_;
    ModelSpec spec_;
    CovariateDesign design_;
    int n_coef_;
    int n_threads_;
};

}  // namespace prefest
