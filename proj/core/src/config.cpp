#include "microsa/config.hpp"

#include "microsa/error.hpp"

#include "json_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace microsa {

std::string_view version() noexcept { return MICROSA_VERSION; }

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

const json& require(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) {
        throw ConfigError("missing configuration key '" + path + key + "'");
    }
    return j.at(key);
}

template <typename T>
T as(const json& v, const std::string& name) {
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("configuration key '" + name + "' has the wrong type");
    }
}

template <typename T>
T get_required(const json& j, const std::string& key, const std::string& path) {
    return as<T>(require(j, key, path), path + key);
}

template <typename T>
void get_optional(const json& j, const std::string& key, const std::string& path, T& target) {
    if (j.is_object() && j.contains(key)) {
        target = as<T>(j.at(key), path + key);
    }
}

std::string resolve(const std::string& p, const std::string& base_dir) {
    const fs::path path(p);
    return path.is_absolute() ? path.string() : (fs::path(base_dir) / path).lexically_normal().string();
}

struct DoubleField {
    const char* name;
    double DemographyParams::*member;
};

constexpr DoubleField demography_fields[] = {
    {"mortality_intercept", &DemographyParams::mortality_intercept},
    {"mortality_slope", &DemographyParams::mortality_slope},
    {"mortality_male_factor", &DemographyParams::mortality_male_factor},
    {"mortality_care_factor", &DemographyParams::mortality_care_factor},
    {"fertility_peak", &DemographyParams::fertility_peak},
    {"fertility_mode_age", &DemographyParams::fertility_mode_age},
    {"fertility_width", &DemographyParams::fertility_width},
    {"fertility_partnered_factor", &DemographyParams::fertility_partnered_factor},
    {"fertility_single_factor", &DemographyParams::fertility_single_factor},
    {"fertility_employed_factor", &DemographyParams::fertility_employed_factor},
    {"male_birth_share", &DemographyParams::male_birth_share},
    {"emigration_national", &DemographyParams::emigration_national},
    {"emigration_foreign", &DemographyParams::emigration_foreign},
    {"internal_move", &DemographyParams::internal_move},
    {"immigration_rate", &DemographyParams::immigration_rate},
    {"immigrant_employed", &DemographyParams::immigrant_employed},
    {"immigrant_unemployed", &DemographyParams::immigrant_unemployed},
    {"naturalization_rate", &DemographyParams::naturalization_rate},
    {"education_low_to_medium", &DemographyParams::education_low_to_medium},
    {"education_medium_to_high", &DemographyParams::education_medium_to_high},
    {"partnership_formation", &DemographyParams::partnership_formation},
    {"separation_partnered", &DemographyParams::separation_partnered},
    {"separation_married", &DemographyParams::separation_married},
    {"marriage", &DemographyParams::marriage},
    {"leave_home", &DemographyParams::leave_home},
    {"care_intercept", &DemographyParams::care_intercept},
    {"care_slope", &DemographyParams::care_slope},
    {"care_recovery", &DemographyParams::care_recovery},
};

void parse_demography(const json& j, DemographyParams& d) {
    const std::string path = "demography.";
    if (!j.is_object()) {
        throw ConfigError("configuration key 'demography' must be an object");
    }
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const auto& f : demography_fields) {
            if (key == f.name) {
                d.*(f.member) = as<double>(value, path + key);
                known = true;
            }
        }
        if (key == "naturalization_min_years") {
            d.naturalization_min_years = as<int>(value, path + key);
        } else if (key == "immigrant_household_sizes") {
            d.immigrant_household_sizes = as<std::array<double, 4>>(value, path + key);
        } else if (key == "immigrant_education") {
            d.immigrant_education = as<std::array<double, 3>>(value, path + key);
        } else if (key == "immigration_history") {
            d.immigration_history.clear();
            for (const auto& h : value) {
                MigrationHistoryYear y;
                y.year = get_required<int>(h, "year", path + "immigration_history[].");
                y.multiplier = get_required<double>(h, "multiplier", path + "immigration_history[].");
                get_optional(h, "exceptional", path + "immigration_history[].", y.exceptional);
                d.immigration_history.push_back(y);
            }
        } else if (!known) {
            throw ConfigError("unknown configuration key '" + path + key + "'");
        }
    }
}

json demography_json(const DemographyParams& d) {
    json j;
    for (const auto& f : demography_fields) {
        j[f.name] = d.*(f.member);
    }
    j["naturalization_min_years"] = d.naturalization_min_years;
    j["immigrant_household_sizes"] = d.immigrant_household_sizes;
    j["immigrant_education"] = d.immigrant_education;
    json hist = json::array();
    for (const auto& h : d.immigration_history) {
        hist.push_back({{"year", h.year}, {"multiplier", h.multiplier}, {"exceptional", h.exceptional}});
    }
    j["immigration_history"] = hist;
    return j;
}

void parse_synthesis(const json& j, SynthConfig& s) {
    const std::string path = "synthesis.";
    const json& districts = require(j, "districts", path);
    if (!districts.is_array()) {
        throw ConfigError("configuration key 'synthesis.districts' must be an array");
    }
    s.districts.clear();
    for (const auto& dj : districts) {
        const std::string dp = path + "districts[].";
        DistrictSpec d;
        d.district_id = get_required<int>(dj, "id", dp);
        d.size = get_required<std::int64_t>(dj, "size", dp);
        d.name = "district_" + std::to_string(d.district_id);
        get_optional(dj, "name", dp, d.name);
        get_optional(dj, "foreign_share", dp, d.foreign_share);
        get_optional(dj, "education", dp, d.education);
        get_optional(dj, "truth_offset", dp, d.truth_offset);
        s.districts.push_back(d);
    }
    if (j.contains("age_distribution")) {
        s.age_distribution.clear();
        for (const auto& b : j.at("age_distribution")) {
            const std::string bp = path + "age_distribution[].";
            s.age_distribution.push_back(AgeBand{get_required<int>(b, "min", bp), get_required<int>(b, "max", bp),
                                                 get_required<double>(b, "share", bp)});
        }
    }
    get_optional(j, "female_share", path, s.female_share);
    get_optional(j, "partnered_share", path, s.partnered_share);
    get_optional(j, "married_share", path, s.married_share);
    get_optional(j, "parental_home_share", path, s.parental_home_share);
    get_optional(j, "naturalized_share", path, s.naturalized_share);
    get_optional(j, "foreign_immigrant_share", path, s.foreign_immigrant_share);
    get_optional(j, "burn_in_years", path, s.burn_in_years);
}

void parse_ground_truth(const json& j, GroundTruthParams& g) {
    const std::string path = "ground_truth.";
    get_optional(j, "switch_year", path, g.switch_year);
    get_optional(j, "period_b_unemployed_shift", path, g.period_b_unemployed_shift);
    get_optional(j, "period_b_inactive_shift", path, g.period_b_inactive_shift);
    get_optional(j, "period_b_foreign_shift", path, g.period_b_foreign_shift);
    get_optional(j, "period_b_high_education_shift", path, g.period_b_high_education_shift);
}

std::pair<int, int> parse_window(const json& j, const std::string& name) {
    const auto v = as<std::vector<int>>(j, name);
    if (v.size() != 2 || v[0] > v[1]) {
        throw ConfigError("configuration key '" + name + "' must be [first_year, last_year]");
    }
    return {v[0], v[1]};
}

} // namespace

DemographyParams ProjectConfig::default_demography() {
    DemographyParams d;
    d.immigration_history = {{2012, 1.0, false}, {2013, 1.15, false}, {2014, 1.4, false}, {2015, 2.6, true},
                             {2016, 2.0, true},  {2017, 1.2, false},  {2018, 1.1, false}, {2019, 1.0, false}};
    return d;
}

ProjectConfig ProjectConfig::from_json(const std::string& text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
    }
    ProjectConfig c;
    c.schema_version = get_required<int>(j, "schema_version", "");
    if (c.schema_version != config_schema_version) {
        throw ConfigError("unsupported schema_version " + std::to_string(c.schema_version));
    }
    static const char* sections[] = {"schema_version", "paths",  "seeds", "years",    "synthesis", "ground_truth",
                                     "survey",         "demography", "grid",  "run", "analysis"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(std::begin(sections), std::end(sections), key) == std::end(sections)) {
            throw ConfigError("unknown configuration key '" + key + "'");
        }
    }

    const json& paths = require(j, "paths", "");
    c.workspace = resolve(get_required<std::string>(paths, "workspace", "paths."), base_dir);
    c.store = (fs::path(c.workspace) / "store").string();
    if (paths.contains("store")) {
        c.store = resolve(get_required<std::string>(paths, "store", "paths."), base_dir);
    }

    const json& seeds = require(j, "seeds", "");
    c.seeds.synthesis = get_required<std::uint64_t>(seeds, "synthesis", "seeds.");
    c.seeds.reality_external = get_required<std::uint64_t>(seeds, "reality_external", "seeds.");
    c.seeds.reality_internal = get_required<std::uint64_t>(seeds, "reality_internal", "seeds.");
    c.seeds.survey = get_required<std::uint64_t>(seeds, "survey", "seeds.");
    c.seeds.coefficients = get_required<std::uint64_t>(seeds, "coefficients", "seeds.");
    c.seeds.static_external = get_required<std::uint64_t>(seeds, "static_external", "seeds.");
    c.seeds.static_internal = get_required<std::uint64_t>(seeds, "static_internal", "seeds.");
    if (seeds.contains("internal_nesting")) {
        c.seeds.internal_nesting =
            parse_internal_nesting(get_required<std::string>(seeds, "internal_nesting", "seeds."));
    }

    const json& years = require(j, "years", "");
    c.years.base = get_required<int>(years, "base", "years.");
    c.years.benchmark_end = get_required<int>(years, "benchmark_end", "years.");
    c.years.projection_end = get_required<int>(years, "projection_end", "years.");

    parse_synthesis(require(j, "synthesis", ""), c.synth);
    c.synth.base_year = c.years.base;
    if (j.contains("ground_truth")) {
        parse_ground_truth(j.at("ground_truth"), c.synth.truth);
    }

    const json& survey = require(j, "survey", "");
    c.survey.fraction = get_required<double>(survey, "fraction", "survey.");
    if (survey.contains("window_a")) {
        c.survey.window_a = parse_window(survey.at("window_a"), "survey.window_a");
    }
    if (survey.contains("window_b")) {
        c.survey.window_b = parse_window(survey.at("window_b"), "survey.window_b");
    }

    if (j.contains("demography")) {
        parse_demography(j.at("demography"), c.demography);
    }
    if (j.contains("grid")) {
        c.grid = detail::grid_from_json(j.at("grid"));
    }
    if (j.contains("run")) {
        get_optional(j.at("run"), "jobs", "run.", c.jobs);
    }
    if (j.contains("analysis")) {
        get_optional(j.at("analysis"), "indicator", "analysis.", c.analysis_indicator);
        get_optional(j.at("analysis"), "region", "analysis.", c.analysis_region);
    }
    c.validate();
    return c;
}

ProjectConfig ProjectConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read configuration file " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str(), fs::path(path).parent_path().string().empty()
                                    ? std::string(".")
                                    : fs::path(path).parent_path().string());
}

void ProjectConfig::validate() const {
    synth.validate();
    grid.validate();
    if (!(years.base < years.benchmark_end && years.benchmark_end <= years.projection_end)) {
        throw ConfigError("years must satisfy base < benchmark_end <= projection_end");
    }
    if (!(survey.fraction > 0.0 && survey.fraction <= 1.0)) {
        throw ConfigError("survey.fraction must lie in (0, 1]");
    }
    for (const auto& w : {survey.window_a, survey.window_b}) {
        if (w.first <= years.base + 1 || w.second > years.benchmark_end) {
            throw ConfigError("survey windows must start at least two years after the base year and end by benchmark_end");
        }
    }
    if (jobs < 1) {
        throw ConfigError("run.jobs must be >= 1");
    }
    double sizes = 0.0;
    for (double v : demography.immigrant_household_sizes) {
        sizes += v;
    }
    double edu = 0.0;
    for (double v : demography.immigrant_education) {
        edu += v;
    }
    if (std::abs(sizes - 1.0) > 1e-9 || std::abs(edu - 1.0) > 1e-9) {
        throw ConfigError("immigrant household-size and education distributions must sum to 1");
    }
}

std::string ProjectConfig::canonical_json() const {
    json j;
    j["schema_version"] = schema_version;
    j["seeds"] = {{"synthesis", seeds.synthesis},
                  {"reality_external", seeds.reality_external},
                  {"reality_internal", seeds.reality_internal},
                  {"survey", seeds.survey},
                  {"coefficients", seeds.coefficients},
                  {"static_external", seeds.static_external},
                  {"static_internal", seeds.static_internal},
                  {"internal_nesting", std::string(to_string(seeds.internal_nesting))}};
    j["years"] = {{"base", years.base}, {"benchmark_end", years.benchmark_end}, {"projection_end", years.projection_end}};
    json districts = json::array();
    for (const auto& d : synth.districts) {
        districts.push_back({{"id", d.district_id},
                             {"name", d.name},
                             {"size", d.size},
                             {"foreign_share", d.foreign_share},
                             {"education", d.education},
                             {"truth_offset", d.truth_offset}});
    }
    json ages = json::array();
    for (const auto& b : synth.age_distribution) {
        ages.push_back({{"min", b.min_age}, {"max", b.max_age}, {"share", b.share}});
    }
    j["synthesis"] = {{"districts", districts},
                      {"age_distribution", ages},
                      {"female_share", synth.female_share},
                      {"partnered_share", synth.partnered_share},
                      {"married_share", synth.married_share},
                      {"parental_home_share", synth.parental_home_share},
                      {"naturalized_share", synth.naturalized_share},
                      {"foreign_immigrant_share", synth.foreign_immigrant_share},
                      {"burn_in_years", synth.burn_in_years}};
    j["ground_truth"] = {{"switch_year", synth.truth.switch_year},
                         {"period_b_unemployed_shift", synth.truth.period_b_unemployed_shift},
                         {"period_b_inactive_shift", synth.truth.period_b_inactive_shift},
                         {"period_b_foreign_shift", synth.truth.period_b_foreign_shift},
                         {"period_b_high_education_shift", synth.truth.period_b_high_education_shift}};
    j["survey"] = {{"fraction", survey.fraction},
                   {"window_a", {survey.window_a.first, survey.window_a.second}},
                   {"window_b", {survey.window_b.first, survey.window_b.second}}};
    j["demography"] = demography_json(demography);
    j["grid"] = detail::grid_to_json(grid);
    return j.dump();
}

std::string ProjectConfig::hash() const { return fnv1a_hex(canonical_json()); }

} // namespace microsa
