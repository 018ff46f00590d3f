#pragma once

#include "microsa/alignment.hpp"
#include "microsa/demography.hpp"
#include "microsa/indicators.hpp"
#include "microsa/transmodel.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string_view>
#include <vector>

namespace microsa {

enum class ModuleId : std::uint8_t {
    mortality = 0,
    birth,
    migration,
    citizenship,
    education,
    partnership,
    care,
    employment,
    aging
};

/// Fixed module order of a simulated year.
inline constexpr std::array<ModuleId, 9> module_order{
    ModuleId::mortality,   ModuleId::birth, ModuleId::migration,  ModuleId::citizenship, ModuleId::education,
    ModuleId::partnership, ModuleId::care,  ModuleId::employment, ModuleId::aging};

std::string_view to_string(ModuleId m);

/// Employment transition probabilities for a covariate vector in a district.
class EmploymentPredictor {
public:
    virtual ~EmploymentPredictor() = default;
    virtual Probabilities predict(const CovariateInput& x, DistrictId district) const = 0;
};

/// A fitted model evaluated at one coefficient draw.
class ModelPredictor final : public EmploymentPredictor {
public:
    ModelPredictor(std::shared_ptr<const FittedModel> model, CoefficientDraw draw);
    Probabilities predict(const CovariateInput& x, DistrictId district) const override;

private:
    std::shared_ptr<const FittedModel> model_;
    CoefficientDraw draw_;
};

/// Wraps a predictor with fixed per-district logit offsets (employed offset 0).
class OffsetPredictor final : public EmploymentPredictor {
public:
    OffsetPredictor(std::shared_ptr<const EmploymentPredictor> base, std::map<DistrictId, Probabilities> offsets);
    Probabilities predict(const CovariateInput& x, DistrictId district) const override;

private:
    std::shared_ptr<const EmploymentPredictor> base_;
    std::map<DistrictId, Probabilities> offsets_;
};

/// Everybody keeps their previous state with probability 1.
class StayPredictor final : public EmploymentPredictor {
public:
    Probabilities predict(const CovariateInput& x, DistrictId district) const override;
};

enum class InternalNesting : std::uint8_t { crossed = 0, nested = 1 };

std::string_view to_string(InternalNesting v);
InternalNesting parse_internal_nesting(std::string_view s);

/// Stream seeds of a run.
///
/// External (all non-employment modules): M(static_external, extmc, district, year, module).
/// Internal (employment): M(static_internal, intmc, district, year) when crossed,
/// M(static_internal, intmc, extmc, district, year) when nested.
struct SeedScheme {
    std::uint64_t static_external = 0;
    std::uint64_t static_internal = 0;
    InternalNesting nesting = InternalNesting::crossed;

    std::uint64_t external(int extmc, DistrictId district, int year, ModuleId module) const noexcept;
    std::uint64_t internal(int intmc, int extmc, DistrictId district, int year) const noexcept;
};

/// Employment model in force from `from_year` on.
struct PredictorRegime {
    int from_year = 0;
    std::shared_ptr<const EmploymentPredictor> predictor;
};

struct RunConfig {
    /// Years first_year..benchmark_end are the benchmark phase, then projection
    /// up to projection_end. The population passed in has year first_year - 1.
    int first_year = 0;
    int benchmark_end = 0;
    int projection_end = 0;

    std::vector<PredictorRegime> regimes;
    /// Benchmark-phase alignment targets; null disables alignment.
    std::shared_ptr<const BenchmarkTargets> targets;
    /// Apply the last benchmark year's offsets in the projection phase.
    bool adjust_projection = false;
    LogitScaleOptions alignment;

    std::shared_ptr<const DemographyParams> demography;
    MigrationVariant migration = MigrationVariant::full;

    SeedScheme seeds;
    int extmc = 1;
    int intmc = 1;

    bool record_draw_log = false;
    /// Validate referential closure after every module.
    bool validate_modules = false;
    /// Called at each year's observation point (after employment, before ageing).
    std::function<void(const Population&)> observer;
};

struct DrawLogEntry {
    ModuleId module = ModuleId::mortality;
    DistrictId district = 0;
    int year = 0;
    std::uint64_t seed = 0;
    std::uint64_t draws = 0;
    std::uint64_t digest = 0;

    friend bool operator==(const DrawLogEntry&, const DrawLogEntry&) = default;
};

/// Indicator tabulation of one district-year at the observation point.
struct RunRecord {
    DistrictId district = 0;
    int year = 0;
    IndicatorCounts counts;
};

/// Mutable per-run state carried between years.
struct RunState {
    /// Alignment offsets per district and benchmark year.
    std::map<DistrictId, std::map<int, std::vector<double>>> alignment_history;
    std::map<DistrictId, InterceptAdjustment> carry_forward;
    std::vector<RunRecord> records;
    std::vector<DistrictAccounting> accounting;
    std::vector<DrawLogEntry> draw_log;
};

/// Simulates year `year` in place: modules in `module_order`, observation, ageing.
void run_year(Population& pop, int year, const RunConfig& config, RunState& state);

/// Runs all benchmark and projection years starting from `base`.
RunState run_simulation(Population base, const RunConfig& config);

/// Employment module on its own (exposed for tests and benchmarks).
void apply_employment(Population& pop, DistrictId district, int year, const RunConfig& config, RunState& state,
                      RandomStream& rng);

} // namespace microsa
