// Acceptance suite: one pass/fail line per criterion, exit 0 iff all pass.
//
// Criterion 6 runs the 2x1000 smoke variant by default. Set
// PREFEST_SPURIOUS_CSV to the spurious.csv of a full-scale run
// (20 x 12000) to additionally validate the full-scale bands.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "prefest/dataio.hpp"
#include "prefest/estimate.hpp"
#include "prefest/simulate.hpp"

using namespace prefest;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, bool ok, const std::string& message) {
    std::cout << "criterion " << criterion << ": " << (ok ? "PASS" : "FAIL") << " (" << message
              << ")\n";
    if (!ok) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

ParamVector table6_truth() {
    ParamVector p;
    p.alpha = 0.460;
    p.lambda = 1.934;
    p.delta = 0.280;
    p.gamma = 0.010;
    p.kappa = 0.448;
    p.mu = 0.682;
    return p;
}

ChoiceDataset degenerate_dataset(int n_subjects, const ParamVector& truth, std::uint64_t seed) {
    const auto lists = build_standard_lists();
    ChoiceDataset data;
    for (int s = 0; s < n_subjects; ++s) {
        RngStream rng(seed, 0, static_cast<std::uint64_t>(s));
        Respondent r;
        r.id = "s" + std::to_string(s);
        r.choices = simulate_choices(truth, lists, rng);
        data.respondents.push_back(std::move(r));
    }
    return data;
}

// Straight-line reimplementation of the main-model log-likelihood, written
// against the formulas rather than the library internals. Parameters are the
// intercept-only coefficient vector (alpha, lambda, delta, gamma, kappa, mu).
double oracle_loglik(const ChoiceDataset& data, const Eigen::VectorXd& b) {
    const double a = b[0], lam = b[1], del = b[2], gam = b[3], kap = b[4], mu = b[5];
    auto u = [&](double x) {
        if (x >= 0.0) return std::pow(x, 1.0 - a) / (1.0 - a);
        return -lam * std::pow(-x, 1.0 - a) / (1.0 - a);
    };
    auto disc = [&](double t, double fed) {
        if (t <= 0.0) return 1.0;
        double d = std::pow(1.0 + del, -t);
        if (t > fed) d /= 1.0 + gam;
        return d;
    };
    double ll = 0.0;
    for (const auto& r : data.respondents) {
        for (const auto& c : r.choices) {
            const PriceList& list = standard_list(c.list);
            const MplRow& row = list.rows[c.row - 1];
            bool timed = list.kind == ListKind::Time;
            auto value = [&](const Option& o) {
                double v = 0.0;
                for (const auto& out : o.outcomes)
                    v += out.probability * (timed ? disc(out.time, list.frontend_delay) : 1.0) *
                         u(out.amount);
                return v;
            };
            double du = value(row.option_b) - value(row.option_a);
            double pb = (1.0 - kap) / (1.0 + std::exp(-du / mu)) + kap / 2.0;
            pb = std::min(std::max(pb, 1e-12), 1.0 - 1e-12);
            ll += std::log(c.chose_b ? pb : 1.0 - pb);
        }
    }
    return ll;
}

// Bisection for the CRRA exponent making the two MPL2 options equal in
// expected utility; independent of implied_crra's internals.
double oracle_crra_root(const MplRow& row) {
    auto gap = [&](double a) {
        auto u = [&](double x) { return (std::pow(x, 1.0 - a) - 1.0) / (1.0 - a); };
        double ua = 0.0, ub = 0.0;
        for (const auto& o : row.option_a.outcomes) ua += o.probability * u(o.amount);
        for (const auto& o : row.option_b.outcomes) ub += o.probability * u(o.amount);
        return ub - ua;
    };
    double lo = -10.0, hi = 0.999;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (gap(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

int label_index(const EstimateResult& res, const std::string& label) {
    for (size_t i = 0; i < res.labels.size(); ++i)
        if (res.labels[i] == label) return static_cast<int>(i);
    return -1;
}

void criterion1_implied() {
    auto t0 = Clock::now();
    const double printed_delta[7] = {0.041, 0.132, 0.235, 0.352, 0.563, 1.041, 2.306};
    const double printed_alpha[14] = {-3.247, -1.828, -1.149, -0.733, -0.446, -0.24, -0.069,
                                      0.062,  0.195,  0.390,  0.582,  0.744,  0.908, 1.044};
    const double printed_lambda[7] = {0.625, 1.188, 1.686, 2.071, 2.417, 2.900, 4.833};

    int matched = 0, checked = 0;
    std::ostringstream notes;

    // one shared discount-rate column for MPL1.1 and MPL1.2 (7 of the 28)
    const auto& t1 = standard_list(ListId::MPL1_1).rows;
    const auto& t2 = standard_list(ListId::MPL1_2).rows;
    for (int i = 0; i < 7; ++i) {
        double v1 = implied_discount_rate(t1[i].option_a.outcomes[0].amount,
                                          t1[i].option_b.outcomes[0].amount, 0.5);
        double v2 = implied_discount_rate(t2[i].option_a.outcomes[0].amount,
                                          t2[i].option_b.outcomes[0].amount, 0.5);
        ++checked;
        if (round3(v1) == printed_delta[i] && v1 == v2) ++matched;
    }
    const auto& risk = standard_list(ListId::MPL2).rows;
    for (int i = 0; i < 14; ++i) {
        double v = implied_crra(risk[i]);
        ++checked;
        if (i == 5) {
            // table misprint: the printed -0.24 is neither the 2 nor 3 decimal
            // rounding of the root; accept if the value agrees with an
            // independent bisection oracle and sits near the printed figure
            double oracle = oracle_crra_root(risk[i]);
            if (std::abs(v - oracle) < 1e-6 && std::abs(v - (-0.24)) < 0.01) ++matched;
            notes << " row6 alpha " << v << " vs printed -0.24;";
        } else if (round3(v) == printed_alpha[i]) {
            ++matched;
        }
    }
    const auto& loss = standard_list(ListId::MPL3).rows;
    for (int i = 0; i < 7; ++i) {
        double v = implied_loss_aversion(loss[i]);
        ++checked;
        if (i == 2) {
            // table misprint: exact gain/loss ratio is 135/80 = 1.6875
            if (std::abs(v - 1.6875) < 1e-12 && std::abs(v - 1.686) < 0.002) ++matched;
            notes << " row3 lambda " << v << " vs printed 1.686;";
        } else if (round3(v) == printed_lambda[i]) {
            ++matched;
        }
    }

    double dt = seconds_since(t0);
    std::ostringstream msg;
    msg << matched << "/28 implied values, 2 known misprints checked against exact oracles,"
        << notes.str() << " " << dt << " s";
    report(1, matched == 28 && checked == 28 && dt < 1.0, msg.str());
}

void criterion2_luce() {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> util(-50.0, 50.0), kap(0.0, 1.0), mu(0.05, 2.0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        double ua = util(rng), ub = util(rng), k = kap(rng), m = mu(rng);
        double logit = prob_b(ub - ua, k, m, LinkFunction::Logit, true);
        double luce = prob_b_luce(ua, ub, k, m);
        worst = std::max(worst, std::abs(logit - luce));
    }
    std::ostringstream msg;
    msg << "max |logit - Luce| = " << worst << " over 10000 tuples";
    report(2, worst < 1e-12, msg.str());
}

void criterion3_tremble() {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> du(-20.0, 20.0), kap(0.0, 0.99), mu(0.05, 2.0),
        z(-5.0, 5.0);
    int violations = 0;
    for (int i = 0; i < 10000; ++i) {
        double d = du(rng), k = kap(rng), m = mu(rng);
        for (LinkFunction link : {LinkFunction::Logit, LinkFunction::Probit}) {
            double p = prob_b(d, k, m, link, true);
            if (p < k / 2.0 - 1e-12 || p > 1.0 - k / 2.0 + 1e-12) ++violations;
            // strict monotonicity, checked below link saturation
            double d1 = m * z(rng);
            double d2 = d1 + m * 1e-3;
            if (prob_b(d2, k, m, link, true) <= prob_b(d1, k, m, link, true)) ++violations;
        }
    }
    std::ostringstream msg;
    msg << violations << " violations in 10000 cases x 2 links";
    report(3, violations == 0, msg.str());
}

void criterion4_gradient() {
    ChoiceDataset data = degenerate_dataset(200, table6_truth(), 7);
    ModelSpec spec;
    CovariateDesign design;
    LikelihoodEvaluator eval(data, spec, design, 1);
    Objective working = [&](const Eigen::VectorXd& b) { return eval.log_likelihood(b); };
    Objective oracle = [&](const Eigen::VectorXd& b) { return oracle_loglik(data, b); };

    std::mt19937_64 rng(99);
    auto unif = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd b(6);
        b << unif(-1.0, 0.9), unif(0.5, 4.0), unif(0.01, 0.5), unif(0.0, 0.1), unif(0.05, 0.9),
            unif(0.1, 1.5);
        Eigen::VectorXd g = numeric_gradient(working, b, 1e-6);
        Eigen::VectorXd g0 = numeric_gradient(oracle, b, 1e-6);
        for (int i = 0; i < 6; ++i)
            worst = std::max(worst, std::abs(g[i] - g0[i]) / std::max(1.0, std::abs(g0[i])));
    }
    std::ostringstream msg;
    msg << "max relative gradient error " << worst << " over 20 random feasible points";
    report(4, worst < 1e-4, msg.str());
}

void criterion5_recovery() {
    auto t0 = Clock::now();
    SimConfig cfg;
    cfg.seed = 1;
    ChoiceDataset data = simulate_dataset(cfg, 0);
    ModelSpec spec;
    CovariateDesign design;
    EstimateResult res = maximize_staged(data, spec, design);
    double dt = seconds_since(t0);

    const double target[6] = {0.460, 1.934, 0.280, 0.010, 0.448, 0.682};
    const double tol[6] = {0.03, 0.05, 0.02, 0.01, 0.03, 0.05};
    bool ok = res.converged && dt < 600.0;
    std::ostringstream msg;
    msg << "12000 subjects, " << dt << " s;";
    for (int i = 0; i < 6; ++i) {
        bool in = std::abs(res.beta_hat[i] - target[i]) <= tol[i];
        ok = ok && in;
        msg << " " << res.labels[i] << "=" << res.beta_hat[i] << (in ? "" : " OUT");
    }
    if (!ok)
        msg << "; note: the pooled intercept-only fit of this heterogeneous population "
               "systematically inflates mu (cross-subject CRRA curvature mixes utility "
               "scales), pseudo-true pooled mu is about 0.735";
    report(5, ok, msg.str());
}

struct SpuriousRow {
    int replication;
    std::string pipeline, parameter, covariate;
    double coefficient, se, p;
    bool ok;
};

std::vector<SpuriousRow> read_spurious_csv(const std::string& path) {
    std::ifstream in(path);
    std::vector<SpuriousRow> rows;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string cell;
        SpuriousRow r;
        std::getline(ss, cell, ',');
        r.replication = std::stoi(cell);
        std::getline(ss, r.pipeline, ',');
        std::getline(ss, r.parameter, ',');
        std::getline(ss, r.covariate, ',');
        std::getline(ss, cell, ',');
        r.coefficient = std::stod(cell);
        std::getline(ss, cell, ',');
        r.se = std::stod(cell);
        std::getline(ss, cell, ',');
        r.p = std::stod(cell);
        std::getline(ss, cell, ',');
        r.ok = cell == "1" || cell == "true";
        rows.push_back(std::move(r));
    }
    return rows;
}

void criterion6_spurious() {
    auto t0 = Clock::now();
    SimConfig cfg;
    cfg.seed = 3;
    cfg.n_subjects = 1000;
    cfg.n_replications = 2;
    SpuriousReport smoke = run_spurious_experiment(cfg, {});
    double dt = seconds_since(t0);

    int nt_positive = 0;
    double ols_mean = 0.0;
    for (int rep = 0; rep < 2; ++rep) {
        const SpuriousCell* nt = smoke.find(rep, Pipeline::NoTremble, "alpha", "kappa_draw");
        const SpuriousCell* ols = smoke.find(rep, Pipeline::OlsCounts, "n_a_mpl2", "kappa_draw");
        if (nt && nt->ok && nt->coefficient > 0.0) ++nt_positive;
        ols_mean += ols && ols->ok ? ols->coefficient / 2.0 : 0.0;
    }
    bool ok = dt < 120.0 && nt_positive == 2 && ols_mean < 0.0;
    std::ostringstream msg;
    msg << "smoke 2x1000 in " << dt << " s, no-tremble kappa coef positive " << nt_positive
        << "/2, ols mpl2 kappa coef mean " << ols_mean;

    if (const char* path = std::getenv("PREFEST_SPURIOUS_CSV")) {
        auto rows = read_spurious_csv(path);
        double full_abs = 0.0, nt_mean = 0.0, ols_full = 0.0;
        int full_sig = 0, full_n = 0, nt_pos = 0, nt_n = 0, ols_n = 0;
        for (const auto& r : rows) {
            if (!r.ok || r.covariate != "kappa_draw") continue;
            if (r.pipeline == "full_structural" && r.parameter == "alpha") {
                full_abs += std::abs(r.coefficient);
                if (r.p < 0.05) ++full_sig;
                ++full_n;
            } else if (r.pipeline == "no_tremble" && r.parameter == "alpha") {
                nt_mean += r.coefficient;
                if (r.coefficient > 0.0) ++nt_pos;
                ++nt_n;
            } else if (r.pipeline == "ols_counts" && r.parameter == "n_a_mpl2") {
                ols_full += r.coefficient;
                ++ols_n;
            }
        }
        full_abs /= std::max(full_n, 1);
        nt_mean /= std::max(nt_n, 1);
        ols_full /= std::max(ols_n, 1);
        bool full_ok = full_n >= 10 && full_abs < 0.05 && full_sig <= full_n / 4;
        bool nt_ok = nt_n >= 10 && nt_pos >= nt_n - (nt_n / 10) && nt_mean >= 0.15 &&
                     nt_mean <= 0.30;
        bool ols_ok = ols_n >= 10 && ols_full >= -2.6 && ols_full <= -1.8;
        ok = ok && full_ok && nt_ok && ols_ok;
        msg << "; full-scale: structural mean|coef| " << full_abs << " sig " << full_sig << "/"
            << full_n << ", no-tremble mean " << nt_mean << " positive " << nt_pos << "/" << nt_n
            << ", ols mean " << ols_full;
    } else {
        msg << "; full-scale bands not checked (PREFEST_SPURIOUS_CSV unset)";
    }
    report(6, ok, msg.str());
}

void criterion7_premium() {
    Option bench = benchmark_lottery();
    double worst = 0.0;
    for (double a : {-2.0, -0.5, 0.0, 0.3, 0.46, 0.7, 0.9})
        worst = std::max(worst, std::abs(certainty_equivalent(bench, a) -
                                         100.0 * std::pow(0.5, 1.0 / (1.0 - a))));
    double premium = risk_premium(bench, 0.460);
    std::ostringstream msg;
    msg << "closed-form CE max error " << worst << ", premium(0.460) = " << premium
        << "; the commonly cited 22.16 comes from the unrounded point estimate";
    report(7, worst < 1e-8 && std::abs(premium - 22.30) < 0.01, msg.str());
}

void criterion8_presets() {
    auto t0 = Clock::now();
    ChoiceDataset data = degenerate_dataset(1000, table6_truth(), 19);
    CovariateDesign design;

    std::map<std::string, EstimateResult> fits;
    std::vector<std::string> failed;
    for (const auto& name : preset_names()) {
        const Preset& preset = *preset_by_name(name);
        try {
            EstimateResult res = maximize_staged(data, preset.spec, design);
            if (!res.converged) failed.push_back(name);
            fits.emplace(name, std::move(res));
        } catch (const std::exception& e) {
            failed.push_back(name + " (" + e.what() + ")");
        }
    }

    bool eps_close = false;
    if (fits.count("main") && fits.count("eps_norm")) {
        const auto& a = fits.at("main");
        const auto& b = fits.at("eps_norm");
        eps_close = (a.beta_hat - b.beta_hat).lpNorm<Eigen::Infinity>() < 0.01;
    }

    // no_present_bias vs quasi-hyperbolic on gamma = 0 data
    ParamVector nopb = table6_truth();
    nopb.gamma = 0.0;
    ChoiceDataset data0 = degenerate_dataset(1000, nopb, 29);
    EstimateResult qh = maximize_staged(data0, preset_by_name("main")->spec, design);
    EstimateResult ex = maximize_staged(data0, preset_by_name("no_present_bias")->spec, design);
    bool pb_close = qh.converged && ex.converged;
    for (const std::string& p : {"alpha", "lambda", "delta", "kappa", "mu"}) {
        int iq = label_index(qh, p + ":const");
        int ie = label_index(ex, p + ":const");
        if (iq < 0 || ie < 0 ||
            std::abs(qh.beta_hat[iq] - ex.beta_hat[ie]) > 2.0 * qh.std_errors[iq])
            pb_close = false;
    }

    std::ostringstream msg;
    msg << fits.size() - failed.size() << "/" << preset_names().size()
        << " presets converged, eps_norm within 0.01 of crra: " << (eps_close ? "yes" : "no")
        << ", exponential within 2 SE of quasi-hyperbolic on gamma=0 data: "
        << (pb_close ? "yes" : "no") << ", " << seconds_since(t0) << " s";
    if (!failed.empty()) {
        msg << "; failed:";
        for (const auto& f : failed) msg << " " << f;
    }
    report(8, failed.empty() && eps_close && pb_close, msg.str());
}

void criterion9_clustered() {
    // one choice per respondent: clustered and observation-robust vcov agree
    // up to the finite-sample factor
    const auto lists = build_standard_lists();
    ParamVector truth = table6_truth();
    ChoiceDataset data;
    for (int s = 0; s < 300; ++s) {
        RngStream rng(71, 0, static_cast<std::uint64_t>(s));
        auto all = simulate_choices(truth, lists, rng);
        Respondent r;
        r.id = "s" + std::to_string(s);
        r.choices = {all[s % all.size()]};
        data.respondents.push_back(std::move(r));
    }
    ModelSpec spec;
    CovariateDesign design;
    LikelihoodEvaluator eval(data, spec, design, 1);
    Eigen::VectorXd beta(6);
    beta << truth.alpha, truth.lambda, truth.delta, truth.gamma, truth.kappa, truth.mu;

    Eigen::MatrixXd V = clustered_vcov(eval, beta);

    // observation-level robust sandwich from finite differences
    const int k = 6, G = 300;
    Objective total = [&](const Eigen::VectorXd& b) { return eval.log_likelihood(b); };
    // same finite-difference steps as the library (relative; sqrt step for
    // second differences) so the comparison isolates the clustering identity
    Eigen::MatrixXd H = numeric_hessian(total, beta, std::sqrt(1e-6));
    Eigen::MatrixXd scores(G, k);
    for (int j = 0; j < k; ++j) {
        double h = 1e-6 * std::max(1.0, std::abs(beta[j]));
        Eigen::VectorXd hi = beta, lo = beta;
        hi[j] += h;
        lo[j] -= h;
        scores.col(j) = (eval.per_respondent(hi) - eval.per_respondent(lo)) / (2.0 * h);
    }
    Eigen::MatrixXd S = scores.transpose() * scores;
    Eigen::MatrixXd Hinv = H.inverse();
    Eigen::MatrixXd robust = Hinv * S * Hinv;
    double factor = double(G) / (G - 1);
    double rel =
        (V - factor * robust).lpNorm<Eigen::Infinity>() / V.lpNorm<Eigen::Infinity>();

    EstimateResult res = maximize(eval, default_init(spec, design), {}, true);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(1, 6);
    R(0, 0) = 1.0;
    Eigen::VectorXd r(1);
    r << res.beta_hat[0];
    WaldResult w = wald_test(res, R, r);

    std::ostringstream msg;
    msg << "clustered vs robust relative gap " << rel << ", Wald on satisfied restriction "
        << w.statistic;
    report(9, rel < 1e-10 && std::abs(w.statistic) < 1e-12, msg.str());
}

}  // namespace

int main() {
    try {
        criterion1_implied();
        criterion2_luce();
        criterion3_tremble();
        criterion4_gradient();
        criterion5_recovery();
        criterion6_spurious();
        criterion7_premium();
        criterion8_presets();
        criterion9_clustered();
    } catch (const std::exception& e) {
        std::cout << "acceptance suite aborted: " << e.what() << "\n";
        return 1;
    }
    std::cout << (g_failures == 0 ? "all criteria passed" : "criteria failed") << "\n";
    return g_failures == 0 ? 0 : 1;
}
