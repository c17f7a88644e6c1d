#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "prefest/simulate.hpp"

using namespace prefest;

TEST_CASE("four-parameter beta") {
    FourParamBeta b{0.0, 0.912, 7.0, 7.0};
    CHECK(b.mean() == doctest::Approx(0.456));
    CHECK(b.cdf(-0.1) == 0.0);
    CHECK(b.cdf(1.0) == 1.0);
    CHECK(b.cdf(0.456) == doctest::Approx(0.5));

    SUBCASE("draws follow the cdf (KS test)") {
        RngStream rng(5);
        const int n = 4000;
        std::vector<double> xs(n);
        for (auto& x : xs) {
            x = b.draw(rng);
            CHECK(x >= 0.0);
            CHECK(x <= 0.912);
        }
        std::sort(xs.begin(), xs.end());
        double ks = 0.0;
        for (int i = 0; i < n; ++i) {
            double F = b.cdf(xs[i]);
            ks = std::max(ks, std::max(F - i / double(n), (i + 1) / double(n) - F));
        }
        // 0.1% critical value 1.949/sqrt(n) = 0.0308
        CHECK(ks < 1.949 / std::sqrt(double(n)));
    }

    SUBCASE("sample mean matches") {
        RngStream rng(6);
        double sum = 0.0;
        const int n = 20000;
        for (int i = 0; i < n; ++i) sum += b.draw(rng);
        CHECK(sum / n == doctest::Approx(b.mean()).epsilon(0.01));
    }
}

TEST_CASE("simulation config defaults mean-match the published estimates") {
    SimConfig cfg;
    CHECK(cfg.alpha.mean() == doctest::Approx(0.456));
    CHECK(cfg.lambda.mean() == doctest::Approx(1.933));
    CHECK(cfg.delta.mean() == doctest::Approx(0.281));
    CHECK(cfg.gamma.mean() == doctest::Approx(0.010));
    CHECK(cfg.kappa.mean() == doctest::Approx(0.430));
    CHECK(cfg.mu.mean() == doctest::Approx(0.687));
    CHECK(cfg.n_subjects == 12000);
    CHECK(cfg.n_replications == 20);
}

TEST_CASE("draws are deterministic in (seed, replication, subject)") {
    SimConfig cfg;
    RngStream a(1, 2, 3), b(1, 2, 3), c(1, 2, 4);
    ParamVector pa = draw_params(cfg, a);
    ParamVector pb = draw_params(cfg, b);
    ParamVector pc = draw_params(cfg, c);
    CHECK(pa.alpha == pb.alpha);
    CHECK(pa.kappa == pb.kappa);
    CHECK(pa.alpha != pc.alpha);
}

TEST_CASE("degenerate preference variance pins the preference parameters") {
    SimConfig cfg;
    cfg.preference_variance = false;
    RngStream rng(9);
    ParamVector p = draw_params(cfg, rng);
    CHECK(p.alpha == cfg.alpha.mean());
    CHECK(p.lambda == cfg.lambda.mean());
    CHECK(p.delta == cfg.delta.mean());
    CHECK(p.gamma == cfg.gamma.mean());
    RngStream rng2(10);
    ParamVector q = draw_params(cfg, rng2);
    CHECK(p.kappa != q.kappa);  // error parameters still vary
}

TEST_CASE("simulated choice frequencies match the model probabilities") {
    ParamVector p;
    p.alpha = 0.46;
    p.lambda = 1.934;
    p.delta = 0.28;
    p.gamma = 0.01;
    p.kappa = 0.448;
    p.mu = 0.682;
    const auto lists = build_standard_lists();
    ModelSpec spec;

    // analytic expected A-count on MPL2
    double expect_a = 0.0;
    for (const auto& row : standard_list(ListId::MPL2).rows)
        expect_a += 1.0 - prob_b(delta_utility(row, ListId::MPL2, p, spec, 1.0), p.kappa, p.mu,
                                 LinkFunction::Logit, true);

    const int n = 4000;
    double total_a = 0.0;
    for (int s = 0; s < n; ++s) {
        RngStream rng(77, 0, s);
        for (const auto& c : simulate_choices(p, lists, rng))
            if (c.list == ListId::MPL2 && !c.chose_b) total_a += 1.0;
    }
    // binomial s.e. on the mean count is well under 0.05 here
    CHECK(total_a / n == doctest::Approx(expect_a).epsilon(0.02));
}

TEST_CASE("simulated dataset attaches the error draws as covariates") {
    SimConfig cfg;
    cfg.n_subjects = 12;
    cfg.seed = 4;
    std::vector<ParamVector> truths;
    ChoiceDataset data = simulate_dataset(cfg, 3, &truths);
    REQUIRE(data.respondents.size() == 12);
    REQUIRE(truths.size() == 12);
    CHECK(data.covariate_names == std::vector<std::string>{"kappa_draw", "mu_draw"});
    for (size_t i = 0; i < truths.size(); ++i) {
        CHECK(data.respondents[i].covariates[0] == truths[i].kappa);
        CHECK(data.respondents[i].covariates[1] == truths[i].mu);
        CHECK(data.respondents[i].choices.size() == 35);
    }
    // replication index changes the draws
    ChoiceDataset other = simulate_dataset(cfg, 4);
    CHECK(other.respondents[0].covariates[0] != data.respondents[0].covariates[0]);
}

TEST_CASE("ols with clustered errors") {
    // exact fit: no residuals, coefficients recovered to machine precision
    const int n = 50;
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n);
    std::vector<int> clusters(n);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = i * 0.1;
        y[i] = 2.0 + 3.0 * X(i, 1);
        clusters[i] = i % 10;
    }
    OlsResult exact = ols_clustered(y, X, clusters);
    CHECK(exact.coefficients[0] == doctest::Approx(2.0));
    CHECK(exact.coefficients[1] == doctest::Approx(3.0));
    CHECK(exact.std_errors.lpNorm<Eigen::Infinity>() < 1e-8);

    SUBCASE("hand-computed sandwich on a tiny system") {
        Eigen::MatrixXd Xs(3, 1);
        Xs << 1.0, 1.0, 1.0;
        Eigen::VectorXd ys(3);
        ys << 1.0, 2.0, 6.0;
        OlsResult r = ols_clustered(ys, Xs, {0, 1, 2});
        CHECK(r.coefficients[0] == doctest::Approx(3.0));
        // meat = sum e_i^2 = 4 + 1 + 9; bread = 1/3; ssc = (3/2)*(2/2) = 1.5
        double expect_var = 1.5 * (14.0 / 9.0);
        CHECK(r.vcov(0, 0) == doctest::Approx(expect_var));
    }

    SUBCASE("rank-deficient design is rejected") {
        Eigen::MatrixXd Xr(4, 2);
        Xr << 1, 2, 1, 2, 1, 2, 1, 2;
        Eigen::VectorXd yr = Eigen::VectorXd::Ones(4);
        CHECK_THROWS_AS(ols_clustered(yr, Xr, {0, 1, 2, 3}), RankDeficient);
    }
}

TEST_CASE("spurious experiment smoke run") {
    SimConfig cfg;
    cfg.n_subjects = 150;
    cfg.n_replications = 1;
    cfg.seed = 12;
    SpuriousOptions opts;
    SpuriousReport report = run_spurious_experiment(cfg, opts);

    // every pipeline reports each parameter x covariate cell
    const SpuriousCell* full = report.find(0, Pipeline::FullStructural, "alpha", "kappa_draw");
    const SpuriousCell* nt = report.find(0, Pipeline::NoTremble, "alpha", "kappa_draw");
    const SpuriousCell* ols = report.find(0, Pipeline::OlsCounts, "n_a_mpl2", "kappa_draw");
    REQUIRE(full != nullptr);
    REQUIRE(nt != nullptr);
    REQUIRE(ols != nullptr);
    CHECK(full->ok);
    CHECK(ols->std_error > 0.0);

    SUBCASE("writers produce the documented layouts") {
        std::stringstream csv;
        report.write_csv(csv);
        std::string header;
        std::getline(csv, header);
        CHECK(header == "replication,pipeline,parameter,covariate,coefficient,se,p,ok");
        int rows = 0;
        for (std::string line; std::getline(csv, line);) ++rows;
        CHECK(rows == static_cast<int>(report.cells.size()));

        std::stringstream summary;
        report.write_summary(summary);
        CHECK(summary.str().find("full_structural") != std::string::npos);
        CHECK(summary.str().find("ols_counts") != std::string::npos);
    }

    SUBCASE("same seed reproduces the report bit for bit") {
        SpuriousReport again = run_spurious_experiment(cfg, opts);
        std::stringstream a, b;
        report.write_csv(a);
        again.write_csv(b);
        CHECK(a.str() == b.str());
    }
}
