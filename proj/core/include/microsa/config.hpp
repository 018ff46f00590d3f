#pragma once

#include "microsa/demography.hpp"
#include "microsa/experiment.hpp"
#include "microsa/synthesis.hpp"
#include "microsa/transmodel.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace microsa {

inline constexpr int config_schema_version = 1;

/// Library version recorded in result-store manifests.
std::string_view version() noexcept;

/// All randomness roots of a project.
struct SeedConfig {
    std::uint64_t synthesis = 1;
    std::uint64_t reality_external = 2;
    std::uint64_t reality_internal = 3;
    std::uint64_t survey = 4;
    std::uint64_t coefficients = 5;
    /// The two static seeds of the experiment's stream scheme.
    std::uint64_t static_external = 6;
    std::uint64_t static_internal = 7;
    InternalNesting internal_nesting = InternalNesting::crossed;
};

struct YearConfig {
    int base = 2011;
    int benchmark_end = 2019;
    int projection_end = 2026;
};

struct SurveyConfig {
    double fraction = 1.0;
    /// Inclusive ranges of survey years (transition t-1 -> t observed in year t).
    std::pair<int, int> window_a{2013, 2015};
    std::pair<int, int> window_b{2017, 2019};
};

struct ProjectConfig {
    int schema_version = config_schema_version;
    std::string workspace = "work";
    std::string store = "work/store";
    SeedConfig seeds;
    YearConfig years;
    SynthConfig synth;
    DemographyParams demography = default_demography();
    SurveyConfig survey;
    GridSpec grid = GridSpec::desk();
    int jobs = 1;
    std::string analysis_indicator = "unemployment_rate";
    std::string analysis_region = "aggregate";

    /// Parses the JSON configuration; relative paths resolve against `base_dir`.
    /// Throws ConfigError naming the first missing or malformed key.
    static ProjectConfig from_json(const std::string& text, const std::string& base_dir = ".");
    static ProjectConfig load(const std::string& path);

    /// Canonical JSON of every setting (used for hashing and provenance).
    std::string canonical_json() const;
    std::string hash() const;
    void validate() const;

    /// Demographic rates with the default immigration history (2015-16 exceptional).
    static DemographyParams default_demography();
};

/// Benchmark totals and survey samples produced by the reference ("reality") run.
struct RealityOutput {
    BenchmarkTargets targets;
    Survey survey_a;
    Survey survey_b;
};

/// Simulates the benchmark years under the ground truth, recording eligible
/// employment totals per district-year and household samples in both windows.
RealityOutput simulate_reality(const Population& base, const ProjectConfig& config);

/// Fits both model types at all three tiers for both periods (12 models).
std::map<ModelKey, FittedModel> estimate_models(const Survey& survey_a, const Survey& survey_b,
                                                const FitOptions& options = {});

Experiment make_experiment(const ProjectConfig& config, Population base,
                           const std::map<ModelKey, FittedModel>& models, BenchmarkTargets targets);

/// Workspace layout.
struct WorkspacePaths {
    std::string population;
    std::string benchmark;
    std::string survey_a;
    std::string survey_b;
    std::string models_dir;

    explicit WorkspacePaths(const std::string& workspace);
    std::string model(const ModelKey& key) const;
};

/// Every model key of the configured grid (both periods, the grid's types and tiers).
std::vector<ModelKey> model_keys(const GridSpec& grid);

/// Rebuilds the experiment from the files written by synthesis and estimation.
Experiment load_experiment(const ProjectConfig& config);

/// Manifest identifying a store produced from `config`.
StoreManifest store_manifest(const ProjectConfig& config);

/// Survey records as tab-separated text with a versioned header.
void write_survey(std::ostream& out, const Survey& survey);
Survey read_survey(std::istream& in);

} // namespace microsa
