#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "prefest/estimate.hpp"
#include "prefest/likelihood.hpp"
#include "prefest/rng.hpp"

namespace prefest {

/// Beta distribution rescaled from [0,1] to [min,max].
struct FourParamBeta {
    double min = 0.0;
    double max = 1.0;
    double shape_a = 7.0;
    double shape_b = 7.0;

    double mean() const { return min + (max - min) * shape_a / (shape_a + shape_b); }
    double draw(RngStream& rng) const { return min + (max - min) * rng.beta(shape_a, shape_b); }
    double cdf(double x) const;  // for KS checks
};

struct SimConfig {
    FourParamBeta alpha{0.0, 0.912, 7.0, 7.0};
    FourParamBeta lambda{0.0, 3.866, 7.0, 7.0};
    // The listed upper limits for delta and gamma are swapped relative to the
    // mean-matching rule (delta mean 0.280, gamma mean 0.010); we follow the
    // means.
    FourParamBeta delta{0.0, 0.562, 7.0, 7.0};
    FourParamBeta gamma{0.0, 0.020, 7.0, 7.0};
    FourParamBeta kappa{0.0, 0.860, 7.0, 7.0};
    FourParamBeta mu{0.0, 1.374, 7.0, 7.0};

    int n_subjects = 12000;
    int n_replications = 20;
    std::uint64_t seed = 1;
    /// When false, the four preference parameters are pinned at their means;
    /// only the error parameters vary.
    bool preference_variance = true;
};

ParamVector draw_params(const SimConfig& cfg, RngStream& rng);

/// One A/B choice per row of each supplied list, drawn with the logit-link
/// tremble probability.
std::vector<Choice> simulate_choices(const ParamVector& params, const std::vector<PriceList>& lists,
                                     RngStream& rng);

/// Simulated subjects with their error draws attached as covariates
/// kappa_draw / mu_draw (plus the preference draws in the truth columns).
ChoiceDataset simulate_dataset(const SimConfig& cfg, std::uint64_t replication,
                               std::vector<ParamVector>* truths = nullptr);

enum class Pipeline { FullStructural, NoTremble, OlsCounts };

std::string to_string(Pipeline p);

struct SpuriousCell {
    int replication = 0;
    Pipeline pipeline = Pipeline::FullStructural;
    std::string parameter;  // structural parameter or count measure
    std::string covariate;  // const, kappa_draw, mu_draw
    double coefficient = 0.0;
    double std_error = 0.0;
    double p_value = 1.0;
    bool ok = true;  // false when the replication's estimation failed
};

struct SpuriousReport {
    SimConfig config;
    std::vector<SpuriousCell> cells;

    const SpuriousCell* find(int replication, Pipeline p, const std::string& parameter,
                             const std::string& covariate) const;
    void write_csv(std::ostream& out) const;
    void write_summary(std::ostream& out) const;
};

struct SpuriousOptions {
    OptimizerConfig optimizer;
    int n_threads = 1;
    bool verbose = false;
};

/// The three-pipeline experiment: full structural fit, the same data refit
/// without the tremble term, and OLS of A-count measures on the error draws.
SpuriousReport run_spurious_experiment(const SimConfig& cfg, const SpuriousOptions& opts = {});

struct OlsResult {
    Eigen::VectorXd coefficients;
    Eigen::MatrixXd vcov;
    Eigen::VectorXd std_errors;
};

/// Least squares with sandwich clustered covariance. Cluster size one reduces
/// to heteroskedasticity-robust (HC1).
OlsResult ols_clustered(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                        const std::vector<int>& cluster_ids);

}  // namespace prefest
