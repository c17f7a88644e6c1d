#include "prefest/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <json.hpp>
#include <set>
#include <sstream>

#include "prefest/mpl.hpp"
#include "prefest/simulate.hpp"

namespace prefest {

using json = nlohmann::json;

std::optional<Preset> preset_by_name(const std::string& name) {
    Preset p;  // main: CRRA, quasi-hyperbolic, logit, tremble, single mu
    if (name == "main") return p;
    if (name == "no_tremble") {
        p.spec.errors.tremble = false;
        return p;
    }
    if (name == "probit") {
        p.spec.link = LinkFunction::Probit;
        return p;
    }
    if (name == "three_fechner") {
        p.spec.errors.fechner_per_list = true;
        return p;
    }
    if (name == "cara") {
        p.spec.family = UtilityFamily::Cara;
        return p;
    }
    if (name == "eps_norm") {
        p.spec.family = UtilityFamily::CrraEps;
        return p;
    }
    if (name == "dual_curvature") {
        p.spec.family = UtilityFamily::DualCurvature;
        return p;
    }
    if (name == "no_present_bias") {
        p.spec.disc = DiscountForm::Exponential;
        return p;
    }
    if (name == "two_rates") {
        p.spec.disc = DiscountForm::TwoRates;
        return p;
    }
    if (name == "time_only") {
        p.spec.time_only = true;
        return p;
    }
    if (name == "no_multiswitch") {
        p.exclude_multiple_switchers = true;
        return p;
    }
    return std::nullopt;
}

std::vector<std::string> preset_names() {
    return {"main",         "no_tremble",     "probit",    "three_fechner",
            "cara",         "eps_norm",       "dual_curvature", "no_present_bias",
            "two_rates",    "time_only",      "no_multiswitch"};
}

ModelSpec RunConfig::resolve_spec() const {
    auto p = preset_by_name(preset);
    if (!p) throw Error("unknown preset: " + preset);
    return p->spec;
}

bool RunConfig::resolve_exclude_multiswitch() const {
    auto p = preset_by_name(preset);
    if (!p) throw Error("unknown preset: " + preset);
    return exclude_multiple_switchers || p->exclude_multiple_switchers;
}

RunConfig load_run_config(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw ParseError("cannot open config: " + json_path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(std::string("config JSON: ") + e.what());
    }
    if (j.value("schema_version", 0) != 1) throw ParseError("config schema_version must be 1");
    RunConfig cfg;
    cfg.choices_csv = j.value("choices_csv", "");
    cfg.covariates_csv = j.value("covariates_csv", "");
    cfg.preset = j.value("preset", "main");
    if (!preset_by_name(cfg.preset)) throw ParseError("unknown preset: " + cfg.preset);
    cfg.exclude_multiple_switchers = j.value("exclude_multiple_switchers", false);
    cfg.output_dir = j.value("output_dir", ".");
    cfg.threads = j.value("threads", 1);
    if (j.contains("covariates")) {
        for (auto& [param, covs] : j.at("covariates").items()) {
            std::vector<std::string> names = covs.get<std::vector<std::string>>();
            cfg.design.covariates[param] = std::move(names);
        }
    }
    if (j.contains("optimizer")) {
        const json& o = j.at("optimizer");
        cfg.optimizer.max_iterations = o.value("max_iterations", cfg.optimizer.max_iterations);
        cfg.optimizer.gradient_tolerance =
            o.value("gradient_tolerance", cfg.optimizer.gradient_tolerance);
        cfg.optimizer.step_tolerance = o.value("step_tolerance", cfg.optimizer.step_tolerance);
        cfg.optimizer.fd_step = o.value("fd_step", cfg.optimizer.fd_step);
        cfg.optimizer.seed = o.value("seed", cfg.optimizer.seed);
        cfg.optimizer.multistarts = o.value("multistarts", cfg.optimizer.multistarts);
        if (cfg.optimizer.gradient_tolerance <= 0 || cfg.optimizer.step_tolerance <= 0 ||
            cfg.optimizer.fd_step <= 0)
            throw ParseError("optimizer tolerances must be positive");
    }
    // fail early on design/spec mismatches
    ModelSpec spec = cfg.resolve_spec();
    auto names = param_names(spec);
    for (const auto& [param, covs] : cfg.design.covariates) {
        (void)covs;
        if (std::find(names.begin(), names.end(), param) == names.end())
            throw ParseError("covariate design references parameter '" + param +
                             "' absent from preset " + cfg.preset);
    }
    return cfg;
}

void save_run_config(const RunConfig& cfg, std::ostream& out) {
    json j;
    j["schema_version"] = 1;
    j["choices_csv"] = cfg.choices_csv;
    j["covariates_csv"] = cfg.covariates_csv;
    j["preset"] = cfg.preset;
    j["exclude_multiple_switchers"] = cfg.exclude_multiple_switchers;
    j["output_dir"] = cfg.output_dir;
    j["threads"] = cfg.threads;
    j["covariates"] = json::object();
    for (const auto& [param, covs] : cfg.design.covariates) j["covariates"][param] = covs;
    j["optimizer"] = {{"max_iterations", cfg.optimizer.max_iterations},
                      {"gradient_tolerance", cfg.optimizer.gradient_tolerance},
                      {"step_tolerance", cfg.optimizer.step_tolerance},
                      {"fd_step", cfg.optimizer.fd_step},
                      {"seed", cfg.optimizer.seed},
                      {"multistarts", cfg.optimizer.multistarts}};
    out << j.dump(2) << '\n';
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    const char* begin = s.data();
    const char* end = begin + s.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return v;
}

struct RawRespondent {
    std::vector<Choice> choices;
    bool has_covariates = false;
    bool missing_covariate = false;
    std::vector<double> covariates;
    double stake_factor = 1.0;
    double currency_multiplier = 1.0;
};

}  // namespace

ChoiceDataset load_dataset(const std::filesystem::path& choices_csv,
                           const std::filesystem::path& covariates_csv,
                           bool exclude_multiple_switchers, IngestionReport* report) {
    IngestionReport local;
    IngestionReport& rep = report ? *report : local;
    rep = IngestionReport{};

    std::ifstream cov_in(covariates_csv);
    if (!cov_in) throw ParseError("cannot open " + covariates_csv.string());
    std::string line;
    if (!std::getline(cov_in, line)) throw ParseError("empty covariates file");
    auto header = split_csv(line);
    if (header.empty() || header[0] != "respondent_id")
        throw ParseError("covariates.csv must start with respondent_id column");

    // stake_factor / currency_multiplier are respondent attributes, not model
    // covariates; country_* columns are validated as one-hot
    std::vector<std::string> cov_names;
    int stake_col = -1, currency_col = -1;
    std::vector<int> country_cols;
    std::vector<int> cov_cols;
    for (size_t c = 1; c < header.size(); ++c) {
        if (header[c] == "stake_factor") {
            stake_col = static_cast<int>(c);
        } else if (header[c] == "currency_multiplier") {
            currency_col = static_cast<int>(c);
        } else {
            if (header[c].rfind("country_", 0) == 0) country_cols.push_back(static_cast<int>(c));
            cov_names.push_back(header[c]);
            cov_cols.push_back(static_cast<int>(c));
        }
    }

    std::map<std::string, RawRespondent> raw;
    std::vector<std::string> order;
    int lineno = 1;
    while (std::getline(cov_in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != header.size())
            throw ParseError("covariates.csv line " + std::to_string(lineno) +
                             ": field count mismatch");
        auto [it, inserted] = raw.try_emplace(fields[0]);
        if (inserted) order.push_back(fields[0]);
        RawRespondent& r = it->second;
        if (r.has_covariates)
            throw ParseError("covariates.csv line " + std::to_string(lineno) +
                             ": duplicate respondent " + fields[0]);
        r.has_covariates = true;
        r.covariates.reserve(cov_cols.size());
        for (int c : cov_cols) {
            auto v = parse_number(fields[c]);
            if (!v) {
                r.missing_covariate = true;
                r.covariates.push_back(0.0);
            } else {
                r.covariates.push_back(*v);
            }
        }
        if (!r.missing_covariate) {
            double country_sum = 0.0;
            for (size_t k = 0; k < cov_cols.size(); ++k) {
                bool is_country = std::find(country_cols.begin(), country_cols.end(),
                                            cov_cols[k]) != country_cols.end();
                if (!is_country) continue;
                double v = r.covariates[k];
                if (v != 0.0 && v != 1.0)
                    throw ParseError("covariates.csv line " + std::to_string(lineno) +
                                     ": country dummy not in {0,1}");
                country_sum += v;
            }
            if (country_sum > 1.0)
                throw ParseError("covariates.csv line " + std::to_string(lineno) +
                                 ": country dummies are not one-hot");
        }
        if (stake_col >= 0) {
            auto v = parse_number(fields[stake_col]);
            if (!v || *v <= 0.0)
                throw ParseError("covariates.csv line " + std::to_string(lineno) +
                                 ": bad stake_factor");
            r.stake_factor = *v;
        }
        if (currency_col >= 0) {
            auto v = parse_number(fields[currency_col]);
            if (!v || *v <= 0.0)
                throw ParseError("covariates.csv line " + std::to_string(lineno) +
                                 ": bad currency_multiplier");
            r.currency_multiplier = *v;
        }
    }

    std::ifstream ch_in(choices_csv);
    if (!ch_in) throw ParseError("cannot open " + choices_csv.string());
    if (!std::getline(ch_in, line)) throw ParseError("empty choices file");
    {
        auto h = split_csv(line);
        if (h.size() != 4 || h[0] != "respondent_id" || h[1] != "list_id" || h[2] != "row" ||
            h[3] != "choice")
            throw ParseError("choices.csv header must be respondent_id,list_id,row,choice");
    }
    lineno = 1;
    while (std::getline(ch_in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv(line);
        if (fields.size() != 4)
            throw ParseError("choices.csv line " + std::to_string(lineno) +
                             ": expected 4 fields");
        auto id = parse_list_id(fields[1]);
        if (!id)
            throw ReferentialError("choices.csv line " + std::to_string(lineno) +
                                   ": unknown list_id " + fields[1]);
        auto rownum = parse_number(fields[2]);
        if (!rownum || *rownum != static_cast<int>(*rownum))
            throw ParseError("choices.csv line " + std::to_string(lineno) + ": bad row");
        int rowidx = static_cast<int>(*rownum);
        int n_rows = static_cast<int>(standard_list(*id).rows.size());
        if (rowidx < 1 || rowidx > n_rows)
            throw ReferentialError("choices.csv line " + std::to_string(lineno) + ": row " +
                                   fields[2] + " out of range for " + to_string(*id));
        bool chose_b;
        if (fields[3] == "A")
            chose_b = false;
        else if (fields[3] == "B")
            chose_b = true;
        else
            throw ParseError("choices.csv line " + std::to_string(lineno) +
                             ": choice must be A or B");
        ++rep.raw_choices;
        auto [it, inserted] = raw.try_emplace(fields[0]);
        if (inserted) order.push_back(fields[0]);
        it->second.choices.push_back(Choice{*id, rowidx, chose_b});
    }

    ChoiceDataset data;
    data.covariate_names = cov_names;
    rep.raw_respondents = static_cast<int>(order.size());
    for (const auto& id : order) {
        RawRespondent& r = raw[id];
        if (!r.has_covariates || r.missing_covariate) {
            ++rep.dropped_missing_covariates;
            continue;
        }
        std::stable_sort(r.choices.begin(), r.choices.end(),
                         [](const Choice& a, const Choice& b) {
                             if (a.list != b.list) return a.list < b.list;
                             return a.row < b.row;
                         });
        bool multi = false;
        for (ListId lid :
             {ListId::MPL1_1, ListId::MPL1_2, ListId::MPL2, ListId::MPL3}) {
            std::vector<ChoiceAB> profile;
            for (const auto& c : r.choices)
                if (c.list == lid) profile.push_back(c.chose_b ? ChoiceAB::B : ChoiceAB::A);
            int expected = static_cast<int>(standard_list(lid).rows.size());
            if (static_cast<int>(profile.size()) != expected) continue;  // partial profile
            ChoiceMeasures m = choice_measures(profile, expected);
            if (m.multiple_switcher) {
                multi = true;
                ++rep.multiple_switcher_lists[to_string(lid)];
            }
        }
        if (multi) ++rep.multiple_switcher_respondents;
        if (multi && exclude_multiple_switchers) {
            ++rep.dropped_multiple_switchers;
            continue;
        }
        Respondent out;
        out.id = id;
        out.covariates = r.covariates;
        out.stake_factor = r.stake_factor;
        out.currency_multiplier = r.currency_multiplier;
        out.choices = std::move(r.choices);
        rep.kept_choices += static_cast<int>(out.choices.size());
        data.respondents.push_back(std::move(out));
    }
    rep.kept_respondents = static_cast<int>(data.respondents.size());
    return data;
}

void export_dataset(const ChoiceDataset& data, std::ostream& choices_out,
                    std::ostream& covariates_out) {
    choices_out << "respondent_id,list_id,row,choice\n";
    covariates_out << "respondent_id";
    for (const auto& name : data.covariate_names) covariates_out << ',' << name;
    covariates_out << ",stake_factor,currency_multiplier\n";
    std::ostringstream num;
    num << std::setprecision(17);
    for (const auto& r : data.respondents) {
        for (const auto& c : r.choices)
            choices_out << r.id << ',' << to_string(c.list) << ',' << c.row << ','
                        << (c.chose_b ? 'B' : 'A') << '\n';
        covariates_out << r.id;
        for (double v : r.covariates) {
            num.str("");
            num << v;
            covariates_out << ',' << num.str();
        }
        num.str("");
        num << r.stake_factor << ',' << r.currency_multiplier;
        covariates_out << ',' << num.str() << '\n';
    }
}

void make_fixture(const std::filesystem::path& dir, std::uint64_t seed, int n_subjects,
                  const ParamVector& truth) {
    std::filesystem::create_directories(dir);
    std::ofstream choices(dir / "choices.csv");
    std::ofstream covariates(dir / "covariates.csv");
    if (!choices || !covariates) throw Error("cannot write fixture files in " + dir.string());
    choices << "respondent_id,list_id,row,choice\n";
    covariates << "respondent_id\n";
    const auto lists = build_standard_lists();
    for (int s = 0; s < n_subjects; ++s) {
        RngStream rng(seed, 0, static_cast<std::uint64_t>(s));
        std::string id = "fix" + std::to_string(s);
        for (const auto& c : simulate_choices(truth, lists, rng))
            choices << id << ',' << to_string(c.list) << ',' << c.row << ','
                    << (c.chose_b ? 'B' : 'A') << '\n';
        covariates << id << '\n';
    }
    json truth_json;
    truth_json["schema_version"] = 1;
    truth_json["seed"] = seed;
    truth_json["n_subjects"] = n_subjects;
    truth_json["parameters"] = {{"alpha", truth.alpha}, {"lambda", truth.lambda},
                                {"delta", truth.delta}, {"gamma", truth.gamma},
                                {"kappa", truth.kappa}, {"mu", truth.mu}};
    std::ofstream tf(dir / "truth.json");
    tf << truth_json.dump(2) << '\n';
}

void write_results_csv(const EstimateResult& result, std::ostream& out) {
    out << "parameter,coefficient,se,z,p\n";
    std::ostringstream line;
    line << std::setprecision(10);
    for (int i = 0; i < result.beta_hat.size(); ++i) {
        double se = result.std_errors[i];
        double z = se > 0 ? result.beta_hat[i] / se : 0.0;
        double p = chi_squared_sf(z * z, 1);
        line.str("");
        line << result.labels[i] << ',' << result.beta_hat[i] << ',' << se << ',' << z << ',' << p
             << '\n';
        out << line.str();
    }
}

void write_run_manifest(const RunConfig& cfg, const EstimateResult& result, std::ostream& out) {
    json j;
    j["schema_version"] = 1;
    j["preset"] = cfg.preset;
    j["choices_csv"] = cfg.choices_csv;
    j["covariates_csv"] = cfg.covariates_csv;
    j["exclude_multiple_switchers"] = cfg.resolve_exclude_multiswitch();
    j["threads"] = cfg.threads;
    j["optimizer"] = {{"max_iterations", cfg.optimizer.max_iterations},
                      {"gradient_tolerance", cfg.optimizer.gradient_tolerance},
                      {"step_tolerance", cfg.optimizer.step_tolerance},
                      {"fd_step", cfg.optimizer.fd_step},
                      {"seed", cfg.optimizer.seed},
                      {"multistarts", cfg.optimizer.multistarts}};
    j["result"] = {{"log_likelihood", result.log_likelihood},
                   {"bic", result.bic},
                   {"n_choices", result.n_choices},
                   {"n_respondents", result.n_respondents},
                   {"n_params", result.n_params},
                   {"converged", result.converged},
                   {"at_boundary", result.at_boundary},
                   {"iterations", result.iterations},
                   {"gradient_norm", result.gradient_norm}};
    json coef = json::array();
    for (int i = 0; i < result.beta_hat.size(); ++i)
        coef.push_back({{"label", result.labels[i]},
                        {"coefficient", result.beta_hat[i]},
                        {"se", result.std_errors[i]}});
    j["coefficients"] = coef;
    out << j.dump(2) << '\n';
}

}  // namespace prefest
