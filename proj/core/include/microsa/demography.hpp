#pragma once

#include "microsa/population.hpp"
#include "microsa/random.hpp"

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace microsa {

/// Migration assumption for the projection phase.
enum class MigrationVariant : std::uint8_t { full = 0, selected = 1 };

std::string_view to_string(MigrationVariant v);
MigrationVariant parse_migration_variant(std::string_view s);

/// Observed immigration intensity of a benchmark year relative to the base level.
struct MigrationHistoryYear {
    int year = 0;
    double multiplier = 1.0;
    /// Excluded from the "selected" projection scenario (exceptional years).
    bool exceptional = false;
};

/// Rates of the demographic modules. Every rate is annual.
struct DemographyParams {
    // Mortality: q = exp(intercept + slope * age), times factors.
    double mortality_intercept = -10.2;
    double mortality_slope = 0.09;
    double mortality_male_factor = 1.4;
    double mortality_care_factor = 2.0;

    // Fertility for women 15-49: peak * exp(-((age - mode) / width)^2), times factors.
    double fertility_peak = 0.16;
    double fertility_mode_age = 31.0;
    double fertility_width = 6.0;
    double fertility_partnered_factor = 1.0;
    double fertility_single_factor = 0.25;
    double fertility_employed_factor = 0.85;
    double male_birth_share = 0.512;

    // Migration.
    double emigration_national = 0.006;
    double emigration_foreign = 0.04;
    double internal_move = 0.012;
    /// Expected immigrant households per resident at multiplier 1.
    double immigration_rate = 0.0045;
    std::vector<MigrationHistoryYear> immigration_history;
    std::array<double, 4> immigrant_household_sizes{0.45, 0.25, 0.15, 0.15};
    std::array<double, 3> immigrant_education{0.45, 0.35, 0.20};
    /// Shares employed and unemployed among eligible immigrants on arrival.
    double immigrant_employed = 0.35;
    double immigrant_unemployed = 0.25;

    // Citizenship: naturalization after a minimum duration of residence.
    int naturalization_min_years = 8;
    double naturalization_rate = 0.08;

    // Education progression.
    double education_low_to_medium = 0.25;   // ages 16-19
    double education_medium_to_high = 0.06;  // ages 19-29

    // Partnership.
    double partnership_formation = 0.08;  // singles 18-60
    double separation_partnered = 0.04;
    double separation_married = 0.012;
    double marriage = 0.08;
    double leave_home = 0.12;  // singles 18-30 in the parental household

    // Care: incidence logistic(intercept + slope * age), recovery rate.
    double care_intercept = -7.0;
    double care_slope = 0.05;
    double care_recovery = 0.20;

    /// Immigration multiplier for `year`. Benchmark years follow the history;
    /// projection years use the mean of the history, without exceptional years
    /// under the selected variant. Years absent from the history use 1.
    double immigration_multiplier(int year, bool projection, MigrationVariant variant) const;

    /// All event rates zero (nothing but ageing happens).
    static DemographyParams none();
};

/// Event totals of one district-year, for the accounting identity
/// end = start + births + immigrants + moved_in - deaths - emigrants - moved_out.
struct DistrictAccounting {
    DistrictId district_id = 0;
    int year = 0;
    std::int64_t start = 0;
    std::int64_t births = 0;
    std::int64_t deaths = 0;
    std::int64_t immigrants = 0;
    std::int64_t emigrants = 0;
    std::int64_t moved_in = 0;
    std::int64_t moved_out = 0;
    std::int64_t end = 0;

    friend bool operator==(const DistrictAccounting&, const DistrictAccounting&) = default;
};

/// Live person ids of a district, ascending.
std::vector<PersonId> district_members(const Population& pop, DistrictId district);

// Demographic modules. Each processes one district with its own stream and
// records events in `acc` (indexed by district position).
void apply_mortality(Population& pop, DistrictId d, const DemographyParams& p, RandomStream& rng,
                     std::vector<DistrictAccounting>& acc);
void apply_births(Population& pop, DistrictId d, const DemographyParams& p, RandomStream& rng,
                  std::vector<DistrictAccounting>& acc);
/// Emigration, internal moves (whole households, to another district chosen
/// proportionally to target size) and immigration. `households` is the
/// district's household list and resident count taken before any district
/// was processed.
void apply_migration(Population& pop, DistrictId d, const std::vector<HouseholdId>& households,
                     std::int64_t residents, double immigration_multiplier, const DemographyParams& p, RandomStream& rng,
                     std::vector<DistrictAccounting>& acc);
void apply_citizenship(Population& pop, DistrictId d, const DemographyParams& p, RandomStream& rng);
void apply_education(Population& pop, DistrictId d, const DemographyParams& p, RandomStream& rng);
void apply_partnership(Population& pop, DistrictId d, const DemographyParams& p, RandomStream& rng);
void apply_care(Population& pop, DistrictId d, const DemographyParams& p, RandomStream& rng);

/// End-of-period ageing of every live person; entering 15 sets `inactive`,
/// leaving 74 sets `not_eligible`; immigrants' duration of stay grows by one.
void apply_aging(Population& pop);

/// Clears last period's birth events.
void reset_period_flags(Population& pop);

/// Adds one immigrant household to district `d`; returns the number of persons.
int add_immigrant_household(Population& pop, DistrictId d, const DemographyParams& p, RandomStream& rng);

} // namespace microsa
