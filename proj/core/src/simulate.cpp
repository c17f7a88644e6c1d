#include "prefest/simulate.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

namespace prefest {

double FourParamBeta::cdf(double x) const {
    if (x <= min) return 0.0;
    if (x >= max) return 1.0;
    return boost::math::ibeta(shape_a, shape_b, (x - min) / (max - min));
}

ParamVector draw_params(const SimConfig& cfg, RngStream& rng) {
    ParamVector p;
    // draw order is part of the stream contract
    double a = cfg.alpha.draw(rng);
    double l = cfg.lambda.draw(rng);
    double d = cfg.delta.draw(rng);
    double g = cfg.gamma.draw(rng);
    p.kappa = cfg.kappa.draw(rng);
    p.mu = cfg.mu.draw(rng);
    if (cfg.preference_variance) {
        p.alpha = a;
        p.lambda = l;
        p.delta = d;
        p.gamma = g;
    } else {
        p.alpha = cfg.alpha.mean();
        p.lambda = cfg.lambda.mean();
        p.delta = cfg.delta.mean();
        p.gamma = cfg.gamma.mean();
    }
    return p;
}

std::vector<Choice> simulate_choices(const ParamVector& params, const std::vector<PriceList>& lists,
                                     RngStream& rng) {
    ModelSpec spec;  // main specification: CRRA, quasi-hyperbolic, logit, tremble
    std::vector<Choice> choices;
    for (const auto& list : lists) {
        for (const auto& row : list.rows) {
            double du = delta_utility(row, list.id, params, spec, 1.0);
            double pb = prob_b(du, params.kappa, params.mu, LinkFunction::Logit, true);
            choices.push_back(Choice{list.id, row.index, rng.uniform() < pb});
        }
    }
    return choices;
}

ChoiceDataset simulate_dataset(const SimConfig& cfg, std::uint64_t replication,
                               std::vector<ParamVector>* truths) {
    const auto lists = build_standard_lists();
    ChoiceDataset data;
    data.covariate_names = {"kappa_draw", "mu_draw"};
    data.respondents.reserve(cfg.n_subjects);
    if (truths) truths->clear();
    for (int s = 0; s < cfg.n_subjects; ++s) {
        RngStream rng(cfg.seed, replication, static_cast<std::uint64_t>(s));
        ParamVector p = draw_params(cfg, rng);
        Respondent r;
        r.id = "sim" + std::to_string(replication) + "_" + std::to_string(s);
        r.covariates = {p.kappa, p.mu};
        r.choices = simulate_choices(p, lists, rng);
        data.respondents.push_back(std::move(r));
        if (truths) truths->push_back(p);
    }
    return data;
}

std::string to_string(Pipeline p) {
    switch (p) {
        case Pipeline::FullStructural: return "full_structural";
        case Pipeline::NoTremble: return "no_tremble";
        case Pipeline::OlsCounts: return "ols_counts";
    }
    return "?";
}

const SpuriousCell* SpuriousReport::find(int replication, Pipeline p, const std::string& parameter,
                                         const std::string& covariate) const {
    for (const auto& c : cells)
        if (c.replication == replication && c.pipeline == p && c.parameter == parameter &&
            c.covariate == covariate)
            return &c;
    return nullptr;
}

void SpuriousReport::write_csv(std::ostream& out) const {
    out << "replication,pipeline,parameter,covariate,coefficient,se,p,ok\n";
    std::ostringstream line;
    line << std::setprecision(10);
    for (const auto& c : cells) {
        line.str("");
        line << c.replication << ',' << to_string(c.pipeline) << ',' << c.parameter << ','
             << c.covariate << ',' << c.coefficient << ',' << c.std_error << ',' << c.p_value << ','
             << (c.ok ? 1 : 0) << '\n';
        out << line.str();
    }
}

namespace {

const char* stars(double p) {
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

OlsResult ols_fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                  const std::vector<int>& clusters);

void run_structural_pipeline(const ChoiceDataset& data, Pipeline pipe, const SpuriousOptions& opts,
                             int replication, std::vector<SpuriousCell>& out) {
    ModelSpec spec;
    if (pipe == Pipeline::NoTremble) spec.errors.tremble = false;
    CovariateDesign design;
    for (const auto& name : param_names(spec))
        design.covariates[name] = {"kappa_draw", "mu_draw"};

    std::vector<SpuriousCell> cells;
    bool ok = true;
    try {
        EstimateResult res = maximize_staged(data, spec, design, opts.optimizer, opts.n_threads);
        int offset = 0;
        for (const auto& name : param_names(spec)) {
            const char* covs[] = {"const", "kappa_draw", "mu_draw"};
            for (int j = 0; j < 3; ++j) {
                SpuriousCell c;
                c.replication = replication;
                c.pipeline = pipe;
                c.parameter = name;
                c.covariate = covs[j];
                c.coefficient = res.beta_hat[offset + j];
                c.std_error = res.std_errors[offset + j];
                double z = c.std_error > 0 ? c.coefficient / c.std_error : 0.0;
                c.p_value = chi_squared_sf(z * z, 1);
                cells.push_back(c);
            }
            offset += 3;
        }
    } catch (const Error&) {
        ok = false;
    }
    if (!ok) {
        SpuriousCell c;
        c.replication = replication;
        c.pipeline = pipe;
        c.parameter = "all";
        c.covariate = "all";
        c.ok = false;
        cells.push_back(c);
    }
    out.insert(out.end(), cells.begin(), cells.end());
}

void run_ols_pipeline(const ChoiceDataset& data, int replication, std::vector<SpuriousCell>& out) {
    const int n = static_cast<int>(data.respondents.size());
    Eigen::MatrixXd X(n, 3);
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n, 4);  // MPL2, MPL3, MPL1.1+1.2, diff
    std::vector<int> clusters(n);
    for (int i = 0; i < n; ++i) {
        const auto& r = data.respondents[i];
        X(i, 0) = 1.0;
        X(i, 1) = r.covariates[0];
        X(i, 2) = r.covariates[1];
        clusters[i] = i;
        int a11 = 0, a12 = 0;
        for (const auto& c : r.choices) {
            if (c.chose_b) continue;
            switch (c.list) {
                case ListId::MPL2: counts(i, 0) += 1.0; break;
                case ListId::MPL3: counts(i, 1) += 1.0; break;
                case ListId::MPL1_1: ++a11; break;
                case ListId::MPL1_2: ++a12; break;
            }
        }
        counts(i, 2) = a11 + a12;
        counts(i, 3) = a12 - a11;
    }
    const char* measures[] = {"n_a_mpl2", "n_a_mpl3", "n_a_time", "pb_diff"};
    const char* covs[] = {"const", "kappa_draw", "mu_draw"};
    for (int m = 0; m < 4; ++m) {
        OlsResult res = ols_fit(counts.col(m), X, clusters);
        for (int j = 0; j < 3; ++j) {
            SpuriousCell c;
            c.replication = replication;
            c.pipeline = Pipeline::OlsCounts;
            c.parameter = measures[m];
            c.covariate = covs[j];
            c.coefficient = res.coefficients[j];
            c.std_error = res.std_errors[j];
            double z = c.std_error > 0 ? c.coefficient / c.std_error : 0.0;
            c.p_value = chi_squared_sf(z * z, 1);
            out.push_back(c);
        }
    }
}

OlsResult ols_fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                  const std::vector<int>& clusters) {
    return ols_clustered(y, X, clusters);
}

}  // namespace

SpuriousReport run_spurious_experiment(const SimConfig& cfg, const SpuriousOptions& opts) {
    SpuriousReport report;
    report.config = cfg;
    std::vector<std::vector<SpuriousCell>> per_rep(cfg.n_replications);
    for (int rep = 0; rep < cfg.n_replications; ++rep) {
        ChoiceDataset data = simulate_dataset(cfg, static_cast<std::uint64_t>(rep));
        // pipelines (i) and (ii) consume the same simulated choices
        run_structural_pipeline(data, Pipeline::FullStructural, opts, rep, per_rep[rep]);
        run_structural_pipeline(data, Pipeline::NoTremble, opts, rep, per_rep[rep]);
        run_ols_pipeline(data, rep, per_rep[rep]);
        if (opts.verbose) {
            std::ostringstream msg;
            msg << "replication " << rep + 1 << "/" << cfg.n_replications << " done\n";
            std::fputs(msg.str().c_str(), stderr);
        }
    }
    for (auto& cells : per_rep)
        report.cells.insert(report.cells.end(), cells.begin(), cells.end());
    return report;
}

void SpuriousReport::write_summary(std::ostream& out) const {
    const Pipeline pipes[] = {Pipeline::FullStructural, Pipeline::NoTremble, Pipeline::OlsCounts};
    for (Pipeline pipe : pipes) {
        out << "== " << to_string(pipe) << " ==\n";
        // collect the parameter x covariate layout present for this pipeline
        std::vector<std::string> params;
        for (const auto& c : cells) {
            if (c.pipeline != pipe || !c.ok) continue;
            bool seen = false;
            for (const auto& p : params) seen = seen || p == c.parameter;
            if (!seen) params.push_back(c.parameter);
        }
        for (const auto& param : params) {
            for (const char* cov : {"kappa_draw", "mu_draw", "const"}) {
                out << std::left << std::setw(10) << param << std::setw(12) << cov;
                for (int rep = 0; rep < config.n_replications; ++rep) {
                    const SpuriousCell* c = find(rep, pipe, param, cov);
                    if (!c) {
                        out << "     -";
                        continue;
                    }
                    out << ' ' << std::right << std::setw(6) << std::fixed << std::setprecision(2)
                        << c->coefficient << stars(c->p_value) << std::left;
                }
                out << '\n';
            }
        }
    }
}

OlsResult ols_clustered(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                        const std::vector<int>& cluster_ids) {
    const int n = static_cast<int>(X.rows());
    const int k = static_cast<int>(X.cols());
    if (static_cast<int>(cluster_ids.size()) != n)
        throw Error("cluster_ids size mismatch");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < k) throw RankDeficient("X is rank deficient");

    Eigen::MatrixXd XtX = X.transpose() * X;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(XtX);
    Eigen::VectorXd beta = ldlt.solve(X.transpose() * y);
    Eigen::VectorXd resid = y - X * beta;

    // cluster score sums
    std::map<int, Eigen::VectorXd> sums;
    for (int i = 0; i < n; ++i) {
        auto [it, inserted] = sums.try_emplace(cluster_ids[i], Eigen::VectorXd::Zero(k));
        it->second += X.row(i).transpose() * resid[i];
    }
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
    for (const auto& [id, s] : sums) {
        (void)id;
        meat += s * s.transpose();
    }
    const int G = static_cast<int>(sums.size());
    double ssc = 1.0;
    if (G > 1 && n > k)
        ssc = (static_cast<double>(G) / (G - 1)) * (static_cast<double>(n - 1) / (n - k));

    Eigen::MatrixXd XtX_inv = ldlt.solve(Eigen::MatrixXd::Identity(k, k));
    OlsResult res;
    res.coefficients = beta;
    res.vcov = ssc * XtX_inv * meat * XtX_inv;
    res.vcov = 0.5 * (res.vcov + res.vcov.transpose());
    res.std_errors = res.vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
    return res;
}

}  // namespace prefest
