#pragma once

#include "microsa/population.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace microsa {

enum class ModelType : std::uint8_t { mnl = 0, rate_table = 1 };
enum class Complexity : std::uint8_t { low = 0, medium = 1, high = 2 };
enum class Period : std::uint8_t { period_A = 0, period_B = 1 };

std::string_view to_string(ModelType v);
std::string_view to_string(Complexity v);
std::string_view to_string(Period v);
ModelType parse_model_type(std::string_view s);
Complexity parse_complexity(std::string_view s);
Period parse_period(std::string_view s);

/// Outcome categories in fixed order (employed, unemployed, inactive).
inline constexpr int n_outcomes = 3;
using Probabilities = std::array<double, n_outcomes>;

/// Natural cubic spline basis in truncated-power form.
///
/// With knots k_1 < ... < k_K on the scaled axis u = x / scale, the basis is
/// u, N_1(u), ..., N_{K-2}(u) where N_j = d_j - d_{K-1} and
/// d_j(u) = ((u - k_j)_+^3 - (u - k_K)_+^3) / (k_K - k_j).
/// The functions are linear beyond the boundary knots and vanish below k_1
/// except for the linear term.
struct SplineBasis {
    std::vector<double> knots;
    double scale = 1.0;

    std::size_t size() const noexcept { return knots.empty() ? 0 : knots.size() - 1; }
    void evaluate(double x, std::span<double> out) const;

    friend bool operator==(const SplineBasis&, const SplineBasis&) = default;
};

/// Spline bases used by every MNL (age, years since immigration, age of youngest child).
struct BasisDefinition {
    SplineBasis age;
    SplineBasis years_since_immigration;
    SplineBasis age_youngest_child;

    /// Interior knots at ages {25,35,45,55,65} (scaled to decades) and at {2,5,10} years.
    static BasisDefinition standard();

    friend bool operator==(const BasisDefinition&, const BasisDefinition&) = default;
};

/// Covariates seen by the employment transition at the moment it is evaluated.
///
/// Tier-specific fields are optional so that an incomplete vector is
/// detectable; `age_youngest_child` is only required when `n_children > 0`.
struct CovariateInput {
    Sex sex = Sex::female;
    Employment previous = Employment::inactive;
    int age = 0;
    // medium tier
    std::optional<bool> birth_event;
    std::optional<Citizenship> citizenship;
    std::optional<bool> immigrant;
    std::optional<int> years_since_immigration;
    std::optional<Education> education;
    std::optional<CareStatus> care_status;
    // high tier
    std::optional<Partnership> partnership;
    std::optional<int> n_children;
    std::optional<int> age_youngest_child;
};

/// Number of design columns for a tier (intercept included). The tiers are
/// prefixes of one another: low = 5, medium = 13, high = 18.
std::size_t design_size(Complexity tier) noexcept;
inline constexpr std::size_t max_design_size = 18;

/// Design column names, in order, for the given tier.
std::vector<std::string> design_names(Complexity tier);

/// Expands covariates into the tier's design row; throws SpecificationError on
/// ineligible age or missing tier covariates.
void design_row(const BasisDefinition& basis, const CovariateInput& x, Complexity tier, std::span<double> out);

/// Index of the (sex, previous state) block; previous must be an active state.
int block_index(Sex sex, Employment previous);
inline constexpr int n_blocks = 6;
std::string block_name(int block);

/// Previous-state mapping for persons entering eligibility (not_eligible -> inactive).
constexpr Employment entry_state(Employment e) noexcept {
    return e == Employment::not_eligible ? Employment::inactive : e;
}

/// Full covariate vector for a live individual given the household context.
CovariateInput covariates_of(const Population& pop, const Individual& person);

} // namespace microsa
