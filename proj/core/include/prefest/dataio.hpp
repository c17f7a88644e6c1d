#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prefest/estimate.hpp"
#include "prefest/likelihood.hpp"

namespace prefest {

/// Named model presets: main, no_tremble, probit, three_fechner, cara,
/// eps_norm, dual_curvature, no_present_bias, two_rates, time_only,
/// no_multiswitch.
struct Preset {
    ModelSpec spec;
    bool exclude_multiple_switchers = false;
};
std::optional<Preset> preset_by_name(const std::string& name);
std::vector<std::string> preset_names();

struct RunConfig {
    std::string choices_csv;
    std::string covariates_csv;
    std::string preset = "main";
    bool exclude_multiple_switchers = false;  // OR-ed with the preset's flag
    CovariateDesign design;                   // empty lists = intercept only
    OptimizerConfig optimizer;
    std::string output_dir = ".";
    int threads = 1;

    ModelSpec resolve_spec() const;
    bool resolve_exclude_multiswitch() const;
};

RunConfig load_run_config(const std::filesystem::path& json_path);
void save_run_config(const RunConfig& cfg, std::ostream& out);

struct IngestionReport {
    int raw_respondents = 0;
    int kept_respondents = 0;
    int dropped_missing_covariates = 0;
    int dropped_multiple_switchers = 0;
    int raw_choices = 0;
    int kept_choices = 0;
    /// Respondents with multiple switch points on at least one list.
    int multiple_switcher_respondents = 0;
    /// Per-list tally of profiles with multiple switch points.
    std::map<std::string, int> multiple_switcher_lists;
};

ChoiceDataset load_dataset(const std::filesystem::path& choices_csv,
                           const std::filesystem::path& covariates_csv,
                           bool exclude_multiple_switchers, IngestionReport* report = nullptr);

void export_dataset(const ChoiceDataset& data, std::ostream& choices_out,
                    std::ostream& covariates_out);

/// Synthetic choices.csv / covariates.csv / truth.json generated from a known
/// parameter vector, for recovery tests.
void make_fixture(const std::filesystem::path& dir, std::uint64_t seed, int n_subjects,
                  const ParamVector& truth);

void write_results_csv(const EstimateResult& result, std::ostream& out);
void write_run_manifest(const RunConfig& cfg, const EstimateResult& result, std::ostream& out);

}  // namespace prefest
