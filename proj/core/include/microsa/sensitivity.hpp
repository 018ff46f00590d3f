#pragma once

#include "microsa/experiment.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace microsa {

struct TableFactor {
    std::string name;
    std::vector<std::string> levels;
};

/// Complete balanced factorial of outputs: one value per cell, stored
/// row-major with the last factor varying fastest.
struct OutputTable {
    std::vector<TableFactor> factors;
    std::vector<double> values;

    std::size_t cell_count() const;
    /// Flat index of a level combination.
    std::size_t index(const std::vector<std::size_t>& levels) const;
};

/// Exact ANOVA decomposition of a complete factorial.
///
/// Terms are addressed by bit masks over the factors (bit i = factor i).
/// `closed[u]` is Var(E[Y | X_u]); `component[u]` is the variance component
/// V_u obtained from the closed variances by inclusion-exclusion over the
/// subsets of u. Population (divide-by-N) variances throughout.
struct SensitivityReport {
    std::vector<std::string> factors;
    double mean = 0.0;
    double variance = 0.0;
    /// False when Var(Y) is zero up to rounding: indices are then undefined (NaN).
    bool defined = true;
    /// Coefficient of variation below 1e-6 (near-degenerate output).
    bool variance_floor = false;

    std::vector<double> closed;
    std::vector<double> component;

    std::vector<double> first_order;  // V_i
    std::vector<double> main_index;   // S_i
    std::vector<double> total_index;  // S_Ti
    /// V_ij and S_ij for i < j, indexed [i][j].
    std::vector<std::vector<double>> second_order;
    std::vector<std::vector<double>> pair_index;
    /// Sum of all components of order >= 3, and its share.
    double higher_order = 0.0;
    double higher_order_index = 0.0;

    std::size_t factor_position(const std::string& name) const;
};

/// Throws DesignError for malformed tables (size mismatch, missing factor levels).
SensitivityReport variance_components(const OutputTable& table);

/// Level restriction "factor=level" used to exclude parts of the grid.
struct Exclusion {
    std::string factor;
    std::string level;
};

/// Parses "factor=level"; throws ConfigError.
Exclusion parse_exclusion(const std::string& text);

/// In-memory view of a result store.
class StoreData {
public:
    static StoreData load(const ResultStore& store);

    const GridSpec& grid() const noexcept { return grid_; }
    const std::vector<FactorPoint>& points() const noexcept { return points_; }
    const std::vector<std::string>& regions() const noexcept { return regions_; }
    const std::vector<int>& years() const noexcept { return years_; }
    bool has_point(const FactorPoint& p) const;
    /// NaN if the value is undefined; throws LookupError for unknown region/indicator/year/point.
    double value(const FactorPoint& p, const std::string& region, const std::string& indicator, int year) const;

    void check_region(const std::string& region) const;

private:
    GridSpec grid_;
    std::vector<FactorPoint> points_;
    std::map<FactorPoint, std::size_t> point_index_;
    std::vector<std::string> regions_;
    std::vector<int> years_;
    std::map<std::string, std::size_t> region_index_;
    std::map<int, std::size_t> year_index_;
    /// [point][region][year][indicator]
    std::vector<double> values_;
};

/// Factor grid actually analyzed after exclusions. When both model types
/// remain, coefficient draws are restricted to 0 and coeff is dropped;
/// factors left with one level are dropped.
struct AnalysisDesign {
    std::vector<Factor> factors;
    std::vector<std::vector<std::string>> levels;
    std::vector<FactorPoint> points;
};

AnalysisDesign analysis_design(const GridSpec& grid, const std::vector<Exclusion>& exclusions);

/// Output table of one (indicator, region, year) slice. Throws DesignError
/// listing the points missing from the store.
OutputTable build_table(const StoreData& data, const AnalysisDesign& design, const std::string& indicator,
                        const std::string& region, int year);

struct YearReport {
    int year = 0;
    SensitivityReport report;
};

std::vector<YearReport> report_series(const StoreData& data, const std::string& indicator, const std::string& region,
                                      const std::vector<Exclusion>& exclusions = {});

/// Long-format CSV: year,term,order,V,S,ST,defined,variance_floor.
void write_report_csv(std::ostream& out, const std::vector<YearReport>& series);

/// Max and median of first-order indices across indicator x region x year slices.
struct SummaryRow {
    std::string factor;
    std::string scope;  // "incl_low" or "excl_low"
    double max = 0.0;
    double median = 0.0;
    std::size_t slices = 0;
};

/// Summary over the given years (all indicators and regions). The coeff
/// factor is summarized from the MNL-only analysis when both types are present.
std::vector<SummaryRow> summarize(const StoreData& data, const std::vector<int>& years);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

/// Stacked-area SVG of S_i per factor plus the interaction share over time.
void write_area_svg(std::ostream& out, const std::vector<YearReport>& series, const std::string& title);

} // namespace microsa
