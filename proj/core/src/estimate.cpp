#include "prefest/estimate.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <random>

namespace prefest {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

Eigen::VectorXd numeric_gradient(const Objective& f, const Eigen::VectorXd& beta, double fd_step) {
    const int n = static_cast<int>(beta.size());
    Eigen::VectorXd grad(n);
    Eigen::VectorXd x = beta;
    for (int i = 0; i < n; ++i) {
        double h = fd_step * std::max(1.0, std::abs(beta[i]));
        for (int attempt = 0;; ++attempt) {
            x[i] = beta[i] + h;
            double fp = f(x);
            x[i] = beta[i] - h;
            double fm = f(x);
            x[i] = beta[i];
            if (std::isfinite(fp) && std::isfinite(fm)) {
                grad[i] = (fp - fm) / (2.0 * h);
                break;
            }
            if (attempt >= 1)
                throw NonFiniteUtility("objective non-finite at perturbed point, component " +
                                       std::to_string(i));
            h *= 0.1;
        }
    }
    return grad;
}

Eigen::MatrixXd numeric_hessian(const Objective& f, const Eigen::VectorXd& beta, double fd_step) {
    const int n = static_cast<int>(beta.size());
    Eigen::MatrixXd H(n, n);
    Eigen::VectorXd x = beta;
    Eigen::VectorXd h(n);
    for (int i = 0; i < n; ++i) h[i] = fd_step * std::max(1.0, std::abs(beta[i]));

    const double f0 = f(beta);
    for (int i = 0; i < n; ++i) {
        x[i] = beta[i] + h[i];
        double fp = f(x);
        x[i] = beta[i] - h[i];
        double fm = f(x);
        x[i] = beta[i];
        H(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            x[i] = beta[i] + h[i];
            x[j] = beta[j] + h[j];
            double fpp = f(x);
            x[j] = beta[j] - h[j];
            double fpm = f(x);
            x[i] = beta[i] - h[i];
            double fmm = f(x);
            x[j] = beta[j] + h[j];
            double fmp = f(x);
            x[i] = beta[i];
            x[j] = beta[j];
            H(i, j) = H(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
        }
    }
    return H;
}

namespace {

struct AscentState {
    Eigen::VectorXd beta;
    double value = kNegInf;
    Eigen::VectorXd grad;
    int iterations = 0;
    bool converged = false;
};

// Inverse diagonal curvature at beta, used to scale BFGS. Coefficients of
// this likelihood differ in curvature by orders of magnitude, so an
// identity-scaled first step either crawls or jumps onto the flat all-noise
// plateau.
Eigen::MatrixXd diagonal_scaling(const Objective& f, const AscentState& st, double fd_step) {
    const int n = static_cast<int>(st.beta.size());
    Eigen::VectorXd x = st.beta;
    Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i) {
        double h = std::sqrt(fd_step) * std::max(1.0, std::abs(st.beta[i]));
        x[i] = st.beta[i] + h;
        double fp = f(x);
        x[i] = st.beta[i] - h;
        double fm = f(x);
        x[i] = st.beta[i];
        if (!std::isfinite(fp) || !std::isfinite(fm)) continue;
        double d = (fp - 2.0 * st.value + fm) / (h * h);
        if (std::isfinite(d) && std::abs(d) > 1e-8) Hinv(i, i) = 1.0 / std::abs(d);
    }
    return Hinv;
}

// BFGS with backtracking Armijo line search; infeasible steps evaluate to
// -inf and shrink the step.
AscentState bfgs_ascent(const Objective& f, const Eigen::VectorXd& init,
                        const OptimizerConfig& cfg) {
    AscentState st;
    st.beta = init;
    st.value = f(init);
    if (!std::isfinite(st.value)) throw InfeasibleInit("objective not finite at starting point");
    st.grad = numeric_gradient(f, st.beta, cfg.fd_step);

    Eigen::MatrixXd Hinv = diagonal_scaling(f, st, cfg.fd_step);
    for (int it = 0; it < cfg.max_iterations; ++it) {
        st.iterations = it + 1;
        if (st.grad.lpNorm<Eigen::Infinity>() < cfg.gradient_tolerance) {
            st.converged = true;
            break;
        }
        Eigen::VectorXd dir = Hinv * st.grad;
        if (dir.dot(st.grad) <= 0.0) {  // not an ascent direction; reset
            Hinv = diagonal_scaling(f, st, cfg.fd_step);
            dir = Hinv * st.grad;
            if (dir.dot(st.grad) <= 0.0) dir = st.grad / std::max(1.0, st.grad.norm());
        }
        double dnorm = dir.norm();
        if (dnorm > 2.0) dir *= 2.0 / dnorm;

        const double slope = dir.dot(st.grad);
        double t = 1.0;
        double new_value = kNegInf;
        Eigen::VectorXd candidate;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            candidate = st.beta + t * dir;
            new_value = f(candidate);
            if (std::isfinite(new_value) && new_value >= st.value + 1e-4 * t * slope) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            st.converged = true;  // no improving step representable
            break;
        }
        Eigen::VectorXd new_grad = numeric_gradient(f, candidate, cfg.fd_step);
        Eigen::VectorXd s = candidate - st.beta;
        Eigen::VectorXd y = st.grad - new_grad;  // ascent: curvature uses -grad change
        double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            Eigen::VectorXd Hy = Hinv * y;
            double yHy = y.dot(Hy);
            Hinv += ((sy + yHy) / (sy * sy)) * (s * s.transpose()) -
                    (Hy * s.transpose() + s * Hy.transpose()) / sy;
        }
        double rel_step = s.norm() / std::max(1.0, st.beta.norm());
        st.beta = candidate;
        st.value = new_value;
        st.grad = new_grad;
        if (rel_step < cfg.step_tolerance) {
            st.converged = true;
            break;
        }
    }
    return st;
}

// Newton refinement from a finite-difference Hessian; keeps only improving
// steps.
void newton_polish(const Objective& f, AscentState& st, const OptimizerConfig& cfg) {
    for (int round = 0; round < cfg.newton_polish_rounds; ++round) {
        Eigen::MatrixXd H = numeric_hessian(f, st.beta, std::sqrt(cfg.fd_step));
        Eigen::LDLT<Eigen::MatrixXd> ldlt(-H);
        if (ldlt.info() != Eigen::Success) return;
        Eigen::VectorXd dir = ldlt.solve(st.grad);
        if (!dir.allFinite()) return;
        double t = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 30; ++ls) {
            Eigen::VectorXd candidate = st.beta + t * dir;
            double v = f(candidate);
            if (std::isfinite(v) && v > st.value) {
                st.beta = candidate;
                st.value = v;
                st.grad = numeric_gradient(f, st.beta, cfg.fd_step);
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if (!improved) return;
    }
}

}  // namespace

EstimateResult maximize(const LikelihoodEvaluator& eval, const Eigen::VectorXd& init,
                        const OptimizerConfig& cfg, bool compute_vcov) {
    Objective f = [&eval](const Eigen::VectorXd& b) { return eval.log_likelihood_or_neg_inf(b); };
    if (!std::isfinite(f(init))) throw InfeasibleInit("initial point infeasible for some respondent");

    AscentState best = bfgs_ascent(f, init, cfg);
    newton_polish(f, best, cfg);

    if (cfg.multistarts > 0) {
        std::mt19937_64 eng(cfg.seed);
        std::normal_distribution<double> jitter(0.0, 0.05);
        for (int s = 0; s < cfg.multistarts; ++s) {
            Eigen::VectorXd start = init;
            for (Eigen::Index i = 0; i < start.size(); ++i) start[i] += jitter(eng);
            if (!std::isfinite(f(start))) continue;
            AscentState st = bfgs_ascent(f, start, cfg);
            newton_polish(f, st, cfg);
            if (st.value > best.value) best = st;
        }
    }

    EstimateResult res;
    res.beta_hat = best.beta;
    res.log_likelihood = best.value;
    res.converged = best.converged;
    res.iterations = best.iterations;
    res.gradient_norm = best.grad.lpNorm<Eigen::Infinity>();
    res.n_respondents = static_cast<int>(eval.data().respondents.size());
    res.n_choices = eval.spec().time_only
                        ? [&] {
                              int n = 0;
                              for (const auto& r : eval.data().respondents)
                                  for (const auto& c : r.choices)
                                      if (kind_of(c.list) == ListKind::Time) ++n;
                              return n;
                          }()
                        : eval.data().n_choices();
    res.n_params = eval.n_coefficients();
    res.bic = bic(res.log_likelihood, res.n_params, res.n_choices);
    res.labels = eval.design().coefficient_labels(eval.spec());

    // boundary flag: a tremble intercept pinned against [0, 1]
    {
        int offset = 0;
        for (const auto& name : param_names(eval.spec())) {
            double v = best.beta[offset];
            if (name == "kappa" && (v < 1e-3 || v > 1.0 - 1e-3)) res.at_boundary = true;
            offset += 1 + static_cast<int>(eval.design().covariates_for(name).size());
        }
    }

    if (compute_vcov) {
        res.vcov_clustered = clustered_vcov(eval, res.beta_hat, cfg.fd_step);
        res.std_errors = res.vcov_clustered.diagonal().cwiseMax(0.0).cwiseSqrt();
    } else {
        res.vcov_clustered = Eigen::MatrixXd::Zero(res.n_params, res.n_params);
        res.std_errors = Eigen::VectorXd::Zero(res.n_params);
    }
    return res;
}

EstimateResult maximize_staged(const ChoiceDataset& data, const ModelSpec& spec,
                               const CovariateDesign& design, const OptimizerConfig& cfg,
                               int n_threads) {
    bool has_covariates = false;
    for (const auto& [param, covs] : design.covariates) {
        (void)param;
        if (!covs.empty()) has_covariates = true;
    }
    LikelihoodEvaluator eval(data, spec, design, n_threads);
    if (!has_covariates) return maximize(eval, default_init(spec, design), cfg);

    CovariateDesign intercept_only;
    LikelihoodEvaluator stage1(data, spec, intercept_only, n_threads);
    EstimateResult base =
        maximize(stage1, default_init(spec, intercept_only), cfg, /*compute_vcov=*/false);

    Eigen::VectorXd init = Eigen::VectorXd::Zero(design.coefficient_count(spec));
    int offset = 0, base_idx = 0;
    for (const auto& name : param_names(spec)) {
        init[offset] = base.beta_hat[base_idx++];
        offset += 1 + static_cast<int>(design.covariates_for(name).size());
    }
    return maximize(eval, init, cfg);
}

Eigen::MatrixXd clustered_vcov(const LikelihoodEvaluator& eval, const Eigen::VectorXd& beta_hat,
                               double fd_step) {
    const int k = static_cast<int>(beta_hat.size());
    const int G = static_cast<int>(eval.data().respondents.size());

    // respondent-level scores by central differences of per-cluster terms
    Eigen::MatrixXd scores(G, k);
    Eigen::VectorXd x = beta_hat;
    for (int i = 0; i < k; ++i) {
        double h = fd_step * std::max(1.0, std::abs(beta_hat[i]));
        x[i] = beta_hat[i] + h;
        Eigen::VectorXd up = eval.per_respondent(x);
        x[i] = beta_hat[i] - h;
        Eigen::VectorXd down = eval.per_respondent(x);
        x[i] = beta_hat[i];
        scores.col(i) = (up - down) / (2.0 * h);
    }
    Eigen::MatrixXd meat = scores.transpose() * scores;

    Objective f = [&eval](const Eigen::VectorXd& b) { return eval.log_likelihood_or_neg_inf(b); };
    Eigen::MatrixXd H = numeric_hessian(f, beta_hat, std::sqrt(fd_step));

    Eigen::FullPivLU<Eigen::MatrixXd> lu(H);
    if (!lu.isInvertible()) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(H);
        double cond = svd.singularValues()(0) / svd.singularValues().tail(1)(0);
        throw SingularHessian("singular Hessian in clustered_vcov", cond);
    }
    Eigen::MatrixXd Hinv = lu.inverse();
    double ssc = G > 1 ? static_cast<double>(G) / (G - 1) : 1.0;
    Eigen::MatrixXd V = ssc * Hinv * meat * Hinv;
    return 0.5 * (V + V.transpose());
}

WaldResult wald_test(const EstimateResult& result, const Eigen::MatrixXd& R,
                     const Eigen::VectorXd& r) {
    Eigen::FullPivLU<Eigen::MatrixXd> rank_check(R);
    const int q = static_cast<int>(R.rows());
    if (rank_check.rank() != q) throw RankDeficient("restriction matrix is not full row rank");

    Eigen::VectorXd diff = R * result.beta_hat - r;
    Eigen::MatrixXd RVR = R * result.vcov_clustered * R.transpose();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(RVR);
    if (!lu.isInvertible()) throw SingularHessian("singular R V R' in wald_test", 0.0);

    WaldResult w;
    w.statistic = diff.dot(lu.solve(diff));
    w.dof = q;
    w.p_value = chi_squared_sf(w.statistic, q);
    return w;
}

double bic(double log_likelihood, int n_params, int n_choices) {
    return std::log(static_cast<double>(n_choices)) * n_params - 2.0 * log_likelihood;
}

double chi_squared_sf(double x, int dof) {
    if (x <= 0.0) return 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

Eigen::VectorXd default_init(const ModelSpec& spec, const CovariateDesign& design) {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(design.coefficient_count(spec));
    int offset = 0;
    for (const auto& name : param_names(spec)) {
        double v = 0.0;
        if (name == "alpha" || name == "alpha_plus" || name == "alpha_minus")
            v = 0.460;
        else if (name == "lambda")
            v = 1.934;
        else if (name == "phi")
            v = 0.02;
        else if (name == "delta" || name == "delta1" || name == "delta2")
            v = 0.280;
        else if (name == "gamma")
            v = 0.010;
        else if (name == "kappa")
            v = 0.448;
        else if (name == "mu" || name == "mu1" || name == "mu2" || name == "mu3")
            v = 0.682;
        beta[offset] = v;
        offset += 1 + static_cast<int>(design.covariates_for(name).size());
    }
    return beta;
}

}  // namespace prefest
