#pragma once

#include "microsa/population.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace microsa {

/// Stable indicator identifiers, in output order.
inline constexpr std::array<std::string_view, 10> indicator_names{
    "unemployment_rate",         "unemployment_rate_national", "unemployment_rate_foreign",
    "unemployment_rate_female",  "unemployment_rate_male",     "share_working_mothers",
    "share_in_partnership",      "total_fertility_rate",       "avg_household_size",
    "share_under_18"};

inline constexpr std::size_t n_indicators = indicator_names.size();

/// Throws LookupError for unknown names.
std::size_t indicator_index(std::string_view name);

inline constexpr int fertile_age_min = 15;
inline constexpr int fertile_age_max = 49;
inline constexpr std::size_t fertile_ages = fertile_age_max - fertile_age_min + 1;

/// Additive tabulation behind the indicators. Regions are aggregated by
/// summing counts, never by averaging rates.
struct IndicatorCounts {
    // labour force by subgroup: [employed, unemployed]
    std::array<std::int64_t, 2> total{};
    std::array<std::int64_t, 2> national{};
    std::array<std::int64_t, 2> foreign{};
    std::array<std::int64_t, 2> female{};
    std::array<std::int64_t, 2> male{};
    std::int64_t mothers = 0;
    std::int64_t working_mothers = 0;
    std::int64_t adults = 0;
    std::int64_t adults_partnered = 0;
    std::int64_t persons = 0;
    std::int64_t households = 0;
    std::int64_t under_18 = 0;
    std::array<std::int64_t, fertile_ages> women_by_age{};
    std::array<std::int64_t, fertile_ages> births_by_age{};

    IndicatorCounts& operator+=(const IndicatorCounts& other);
    friend bool operator==(const IndicatorCounts&, const IndicatorCounts&) = default;
};

/// Indicator values in `indicator_names` order; NaN marks an undefined value.
using IndicatorValues = std::array<double, n_indicators>;

/// A woman aged 18-74 co-residing with someone under 18 who is at least 15 years younger.
bool is_mother(const Population& pop, const Individual& woman);

/// Counts for every district, in `pop.districts()` order.
std::vector<IndicatorCounts> tabulate_districts(const Population& pop);
/// Counts for one district, or for the whole population when `district` is empty.
IndicatorCounts tabulate(const Population& pop, std::optional<DistrictId> district);

IndicatorValues indicator_values(const IndicatorCounts& counts);
IndicatorValues compute_indicators(const Population& pop, std::optional<DistrictId> district);

} // namespace microsa
