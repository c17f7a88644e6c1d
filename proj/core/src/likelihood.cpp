#include "prefest/likelihood.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

namespace prefest {

double link_cdf(double z, LinkFunction link) {
    switch (link) {
        case LinkFunction::Logit:
            return 1.0 / (1.0 + std::exp(-z));
        case LinkFunction::Probit:
            return 0.5 * std::erfc(-z * M_SQRT1_2);
    }
    return 0.5;
}

std::vector<std::string> param_names(const ModelSpec& spec) {
    std::vector<std::string> names;
    if (!spec.time_only) {
        switch (spec.family) {
            case UtilityFamily::Crra:
            case UtilityFamily::CrraEps:
                names.push_back("alpha");
                names.push_back("lambda");
                break;
            case UtilityFamily::Cara:
                names.push_back("phi");
                names.push_back("lambda");
                break;
            case UtilityFamily::DualCurvature:
                names.push_back("alpha_plus");
                names.push_back("alpha_minus");
                break;
        }
    }
    switch (spec.disc) {
        case DiscountForm::QuasiHyperbolic:
            names.push_back("delta");
            names.push_back("gamma");
            break;
        case DiscountForm::Exponential:
            names.push_back("delta");
            break;
        case DiscountForm::TwoRates:
            names.push_back("delta1");
            names.push_back("delta2");
            break;
        case DiscountForm::None:
            break;
    }
    if (spec.errors.tremble) names.push_back("kappa");
    if (spec.errors.fechner_per_list) {
        names.push_back("mu1");
        names.push_back("mu2");
        names.push_back("mu3");
    } else {
        names.push_back("mu");
    }
    return names;
}

const std::vector<std::string>& CovariateDesign::covariates_for(const std::string& param) const {
    static const std::vector<std::string> empty;
    auto it = covariates.find(param);
    return it == covariates.end() ? empty : it->second;
}

int CovariateDesign::coefficient_count(const ModelSpec& spec) const {
    int n = 0;
    for (const auto& name : param_names(spec)) n += 1 + static_cast<int>(covariates_for(name).size());
    return n;
}

std::vector<std::string> CovariateDesign::coefficient_labels(const ModelSpec& spec) const {
    std::vector<std::string> labels;
    for (const auto& name : param_names(spec)) {
        labels.push_back(name + ":const");
        for (const auto& cov : covariates_for(name)) labels.push_back(name + ":" + cov);
    }
    return labels;
}

int ChoiceDataset::n_choices() const {
    int n = 0;
    for (const auto& r : respondents) n += static_cast<int>(r.choices.size());
    return n;
}

int ChoiceDataset::covariate_index(const std::string& name) const {
    for (size_t i = 0; i < covariate_names.size(); ++i)
        if (covariate_names[i] == name) return static_cast<int>(i);
    return -1;
}

namespace {

void assign_param(ParamVector& p, const std::string& name, double value) {
    if (name == "alpha")
        p.alpha = value;
    else if (name == "lambda")
        p.lambda = value;
    else if (name == "phi")
        p.phi = value;
    else if (name == "alpha_plus")
        p.alpha_plus = value;
    else if (name == "alpha_minus")
        p.alpha_minus = value;
    else if (name == "delta" || name == "delta1")
        p.delta = value;
    else if (name == "delta2")
        p.delta2 = value;
    else if (name == "gamma")
        p.gamma = value;
    else if (name == "kappa")
        p.kappa = value;
    else if (name == "mu" || name == "mu1")
        p.mu = value;
    else if (name == "mu2")
        p.mu2 = value;
    else if (name == "mu3")
        p.mu3 = value;
    else
        throw DesignMismatch("unknown parameter name: " + name);
}

}  // namespace

ParamVector params_for(const ChoiceDataset& data, const Respondent& r, const Eigen::VectorXd& beta,
                       const ModelSpec& spec, const CovariateDesign& design) {
    ParamVector p;
    int offset = 0;
    for (const auto& name : param_names(spec)) {
        double value = beta[offset++];
        for (const auto& cov : design.covariates_for(name)) {
            int idx = data.covariate_index(cov);
            if (idx < 0) throw DesignMismatch("covariate not in dataset: " + cov);
            value += beta[offset++] * r.covariates[idx];
        }
        assign_param(p, name, value);
    }
    if (offset != beta.size()) throw DesignMismatch("coefficient vector size mismatch");
    return p;
}

void check_feasible(const ParamVector& p, const ModelSpec& spec, const std::string& respondent_id) {
    auto fail = [&](const char* name, double v) {
        throw InfeasibleParameters(respondent_id, name, v);
    };
    if (!spec.time_only) {
        switch (spec.family) {
            case UtilityFamily::Crra:
            case UtilityFamily::CrraEps:
                if (std::abs(1.0 - p.alpha) < 1e-8) fail("alpha", p.alpha);
                if (p.lambda <= 0.0) fail("lambda", p.lambda);
                break;
            case UtilityFamily::Cara:
                if (p.phi == 0.0) fail("phi", p.phi);
                if (p.lambda <= 0.0) fail("lambda", p.lambda);
                break;
            case UtilityFamily::DualCurvature:
                if (std::abs(1.0 - p.alpha_plus) < 1e-8) fail("alpha_plus", p.alpha_plus);
                if (std::abs(1.0 - p.alpha_minus) < 1e-8) fail("alpha_minus", p.alpha_minus);
                break;
        }
    }
    if (spec.disc != DiscountForm::None) {
        if (p.delta <= -1.0) fail("delta", p.delta);
        if (spec.disc == DiscountForm::QuasiHyperbolic && p.gamma <= -1.0) fail("gamma", p.gamma);
        if (spec.disc == DiscountForm::TwoRates && p.delta2 <= -1.0) fail("delta2", p.delta2);
    }
    if (spec.errors.tremble && (p.kappa < 0.0 || p.kappa > 1.0)) fail("kappa", p.kappa);
    if (p.mu <= 0.0) fail("mu", p.mu);
    if (spec.errors.fechner_per_list) {
        if (p.mu2 <= 0.0) fail("mu2", p.mu2);
        if (p.mu3 <= 0.0) fail("mu3", p.mu3);
    }
}

double prob_b(double delta_u, double kappa, double mu, LinkFunction link, bool tremble) {
    if (!std::isfinite(delta_u)) throw NonFiniteUtility("non-finite utility difference");
    double p = link_cdf(delta_u / mu, link);
    if (tremble) p = (1.0 - kappa) * p + 0.5 * kappa;
    return std::min(std::max(p, 1e-12), 1.0 - 1e-12);
}

double prob_b_luce(double u_a, double u_b, double kappa, double mu) {
    if (!std::isfinite(u_a) || !std::isfinite(u_b)) throw NonFiniteUtility("non-finite utility");
    double za = u_a / mu, zb = u_b / mu;
    double zmax = std::max(za, zb);
    double ea = std::exp(za - zmax), eb = std::exp(zb - zmax);
    double p = (1.0 - kappa) * eb / (ea + eb) + 0.5 * kappa;
    return std::min(std::max(p, 1e-12), 1.0 - 1e-12);
}

double delta_utility(const MplRow& row, ListId list, const ParamVector& p, const ModelSpec& spec,
                     double stake_factor) {
    const bool temporal = kind_of(list) == ListKind::Time;
    const DiscountForm disc = temporal ? spec.disc : DiscountForm::None;
    const double delay = standard_list(list).frontend_delay;
    auto value = [&](const Option& opt) {
        double v = 0.0;
        for (const auto& o : opt.outcomes)
            v += o.probability * discount_factor(o.time, p, disc, delay) *
                 utility(o.amount * stake_factor, p, spec.family);
        return v;
    };
    return value(row.option_b) - value(row.option_a);
}

LikelihoodEvaluator::LikelihoodEvaluator(const ChoiceDataset& data, ModelSpec spec,
                                         CovariateDesign design, int n_threads)
    : data_(&data),
      spec_(spec),
      design_(std::move(design)),
      n_coef_(design_.coefficient_count(spec)),
      n_threads_(std::max(1, n_threads)) {
    for (const auto& [param, covs] : design_.covariates) {
        (void)param;
        for (const auto& cov : covs)
            if (data.covariate_index(cov) < 0)
                throw DesignMismatch("covariate not in dataset: " + cov);
    }
}

double LikelihoodEvaluator::respondent_term(const Respondent& r, const Eigen::VectorXd& beta) const {
    ParamVector p = params_for(*data_, r, beta, spec_, design_);
    check_feasible(p, spec_, r.id);
    double ll = 0.0;
    for (const auto& c : r.choices) {
        if (spec_.time_only && kind_of(c.list) != ListKind::Time) continue;
        const PriceList& list = standard_list(c.list);
        const MplRow& row = list.rows.at(c.row - 1);
        double du = delta_utility(row, c.list, p, spec_, r.stake_factor);
        double mu = p.mu;
        if (spec_.errors.fechner_per_list) {
            if (c.list == ListId::MPL2)
                mu = p.mu2;
            else if (c.list == ListId::MPL3)
                mu = p.mu3;
        }
        double pb = prob_b(du, p.kappa, mu, spec_.link, spec_.errors.tremble);
        ll += c.chose_b ? std::log(pb) : std::log1p(-pb);
    }
    return ll;
}

Eigen::VectorXd LikelihoodEvaluator::per_respondent(const Eigen::VectorXd& beta) const {
    const auto& resp = data_->respondents;
    Eigen::VectorXd terms(resp.size());
    const int n = static_cast<int>(resp.size());
    if (n_threads_ == 1 || n < 64) {
        for (int i = 0; i < n; ++i) terms[i] = respondent_term(resp[i], beta);
        return terms;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    constexpr int kBlock = 256;
    auto worker = [&] {
        for (;;) {
            int start = next.fetch_add(kBlock);
            if (start >= n) return;
            int end = std::min(start + kBlock, n);
            try {
                for (int i = start; i < end; ++i) terms[i] = respondent_term(resp[i], beta);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    for (int t = 0; t < n_threads_; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
    return terms;
}

double LikelihoodEvaluator::log_likelihood(const Eigen::VectorXd& beta) const {
    Eigen::VectorXd terms = per_respondent(beta);
    // fixed reduction order
    double total = 0.0;
    for (Eigen::Index i = 0; i < terms.size(); ++i) total += terms[i];
    return total;
}

double LikelihoodEvaluator::log_likelihood_or_neg_inf(const Eigen::VectorXd& beta) const {
    try {
        return log_likelihood(beta);
    } catch (const InfeasibleParameters&) {
        return -std::numeric_limits<double>::infinity();
    } catch (const NonFiniteUtility&) {
        return -std::numeric_limits<double>::infinity();
    }
}

std::vector<double> LikelihoodEvaluator::choice_probabilities(const Respondent& r,
                                                              const Eigen::VectorXd& beta) const {
    ParamVector p = params_for(*data_, r, beta, spec_, design_);
    check_feasible(p, spec_, r.id);
    std::vector<double> probs;
    probs.reserve(r.choices.size());
    for (const auto& c : r.choices) {
        if (spec_.time_only && kind_of(c.list) != ListKind::Time) continue;
        const MplRow& row = standard_list(c.list).rows.at(c.row - 1);
        double du = delta_utility(row, c.list, p, spec_, r.stake_factor);
        double mu = p.mu;
        if (spec_.errors.fechner_per_list) {
            if (c.list == ListId::MPL2)
                mu = p.mu2;
            else if (c.list == ListId::MPL3)
                mu = p.mu3;
        }
        probs.push_back(prob_b(du, p.kappa, mu, spec_.link, spec_.errors.tremble));
    }
    return probs;
}

}  // namespace prefest
