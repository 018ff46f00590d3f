#pragma once

#include "microsa/simkernel.hpp"

#include <array>
#include <atomic>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace microsa {

/// The eight experimental factors in canonical order.
enum class Factor : std::uint8_t { type = 0, complexity, adjustment, period, coeff, extmc, intmc, migration };

inline constexpr std::array<std::string_view, 8> factor_names{"type",  "compl", "adju",  "period",
                                                              "coeff", "extmc", "intmc", "migr"};
inline constexpr std::size_t n_factors = factor_names.size();

/// Throws LookupError for unknown names.
Factor parse_factor(std::string_view name);

struct FactorPoint {
    ModelType type = ModelType::mnl;
    Complexity complexity = Complexity::low;
    bool adjustment = false;
    Period period = Period::period_A;
    int coeff = 0;
    int extmc = 1;
    int intmc = 1;
    MigrationVariant migration = MigrationVariant::full;

    /// Stable identifier, e.g. "mnl-high-adj_yes-period_A-c2-e1-i3-full".
    std::string id() const;
    /// Level label of one factor ("mnl", "high", "yes", "period_A", "2", ...).
    std::string level(Factor f) const;

    friend auto operator<=>(const FactorPoint&, const FactorPoint&) = default;
};

/// Parses FactorPoint::id(); throws LookupError on malformed ids.
FactorPoint parse_point_id(std::string_view id);

/// Levels of each factor. Rate-table points only take coeff level 0.
struct GridSpec {
    std::vector<ModelType> types{ModelType::mnl, ModelType::rate_table};
    std::vector<Complexity> complexities{Complexity::low, Complexity::medium, Complexity::high};
    std::vector<bool> adjustments{true, false};
    std::vector<Period> periods{Period::period_A, Period::period_B};
    std::vector<int> coeffs{0, 1, 2, 3};
    std::vector<int> extmcs{1, 2};
    std::vector<int> intmcs{1, 2, 3, 4};
    std::vector<MigrationVariant> migrations{MigrationVariant::full, MigrationVariant::selected};

    /// coeff 0-10, extmc 1-5, intmc 1-10.
    static GridSpec full_scale();
    /// coeff 0-3, extmc 1-2, intmc 1-4.
    static GridSpec desk();

    /// Closed-form number of points: product over factors, coeff counted once for rate tables.
    std::size_t count() const;
    /// Throws ConfigError on empty or duplicated levels, negative draws, or MC levels < 1.
    void validate() const;

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Cross product in canonical nesting order (type outermost, migr innermost),
/// with rate-table points restricted to coeff 0.
std::vector<FactorPoint> enumerate_grid(const GridSpec& grid);

/// Checks that no two stream seeds used by the grid coincide. Throws DesignError.
void check_seed_collisions(const GridSpec& grid, const SeedScheme& seeds, const std::vector<DistrictId>& districts,
                           int first_year, int last_year);

struct ModelKey {
    ModelType type = ModelType::mnl;
    Complexity complexity = Complexity::low;
    Period period = Period::period_A;

    friend auto operator<=>(const ModelKey&, const ModelKey&) = default;
};

/// Everything shared read-only by the runs of one experiment.
struct Experiment {
    std::shared_ptr<const Population> base;
    std::map<ModelKey, std::shared_ptr<const FittedModel>> models;
    /// Coefficient draw d of model m uses seed M(coefficient_seed, type, complexity, period).
    std::uint64_t coefficient_seed = 0;
    std::shared_ptr<const BenchmarkTargets> targets;
    std::shared_ptr<const DemographyParams> demography;
    SeedScheme seeds;
    int first_year = 0;
    int benchmark_end = 0;
    int projection_end = 0;
    LogitScaleOptions alignment;

    /// Run configuration of one factor point.
    RunConfig run_config(const FactorPoint& point) const;
};

/// Region label of the pooled population.
inline constexpr std::string_view aggregate_region = "aggregate";

/// One line of a point's result file.
struct OutputRecord {
    std::string region;
    int year = 0;
    std::string indicator;
    double value = 0.0;
};

/// District records plus pooled-count aggregate records, in a fixed order.
std::vector<OutputRecord> output_records(const std::vector<RunRecord>& records);

/// Simulates one factor point.
std::vector<OutputRecord> run_point(const Experiment& experiment, const FactorPoint& point);

struct StoreManifest {
    int format = 1;
    std::string config_hash;
    std::string code_version;
    GridSpec grid;

    friend bool operator==(const StoreManifest&, const StoreManifest&) = default;
};

/// Directory store: manifest.json, points/<id>.tsv (written atomically, the
/// file's presence marks completion) and failed/<id>.txt.
class ResultStore {
public:
    /// Creates a new store; an existing non-empty directory is refused unless
    /// `resume` is set and its manifest matches.
    static ResultStore create(const std::string& dir, const StoreManifest& manifest, bool resume);
    static ResultStore open(const std::string& dir);

    const std::string& dir() const noexcept { return dir_; }
    const StoreManifest& manifest() const noexcept { return manifest_; }

    bool completed(const std::string& point_id) const;
    std::vector<std::string> completed_ids() const;
    std::vector<std::string> failed_ids() const;
    void write_point(const std::string& point_id, const std::vector<OutputRecord>& records) const;
    void write_failure(const std::string& point_id, const std::string& message) const;
    std::vector<OutputRecord> read_point(const std::string& point_id) const;

private:
    ResultStore(std::string dir, StoreManifest manifest) : dir_(std::move(dir)), manifest_(std::move(manifest)) {}
    std::string dir_;
    StoreManifest manifest_;
};

struct ProgressEvent {
    std::string point_id;
    std::string status;  // "done", "skipped", "failed"
    std::size_t finished = 0;
    std::size_t total = 0;
    std::string message;
};

struct ExecutionSummary {
    std::size_t completed = 0;
    std::size_t skipped = 0;
    std::size_t failed = 0;
};

/// Runs every point not yet completed in the store with `jobs` worker threads.
/// Failures are recorded per point and do not stop the grid. `stop` (optional)
/// is polled between points to interrupt execution.
ExecutionSummary execute_grid(const std::vector<FactorPoint>& points, const Experiment& experiment, int jobs,
                              const ResultStore& store, const std::function<void(const ProgressEvent&)>& progress = {},
                              const std::atomic<bool>* stop = nullptr);

/// FNV-1a hash of a byte string, as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

} // namespace microsa
