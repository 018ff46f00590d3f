#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace microsa {

using PersonId = std::int64_t;
using HouseholdId = std::int64_t;
using DistrictId = int;

inline constexpr PersonId no_person = -1;

enum class Sex : std::uint8_t { female = 0, male = 1 };

/// Labour-market state. `not_eligible` is the fixed code for ages outside 15-74.
enum class Employment : std::uint8_t { employed = 0, unemployed = 1, inactive = 2, not_eligible = 3 };

enum class Education : std::uint8_t { low = 0, medium = 1, high = 2 };
enum class Citizenship : std::uint8_t { national = 0, foreign = 1 };
enum class CareStatus : std::uint8_t { none = 0, receiving_care = 1 };
enum class Partnership : std::uint8_t { single = 0, partnered_cohabiting = 1, married_cohabiting = 2 };

inline constexpr int min_working_age = 15;
inline constexpr int max_working_age = 74;
inline constexpr int child_age_limit = 18;

constexpr bool is_working_age(int age) noexcept { return age >= min_working_age && age <= max_working_age; }

std::string_view to_string(Sex v);
std::string_view to_string(Employment v);
std::string_view to_string(Education v);
std::string_view to_string(Citizenship v);
std::string_view to_string(CareStatus v);
std::string_view to_string(Partnership v);

Sex parse_sex(std::string_view s);
Employment parse_employment(std::string_view s);
Education parse_education(std::string_view s);
Citizenship parse_citizenship(std::string_view s);
CareStatus parse_care_status(std::string_view s);
Partnership parse_partnership(std::string_view s);

struct Individual {
    PersonId person_id = no_person;
    HouseholdId household_id = -1;
    /// Denormalized copy of the household's district; kept in sync by Population.
    DistrictId district_id = 0;
    Sex sex = Sex::female;
    int age = 0;
    Employment employment = Employment::not_eligible;
    Education education = Education::low;
    Citizenship citizenship = Citizenship::national;
    /// True for persons who immigrated at some point (years_since_immigration is meaningful).
    bool immigrant = false;
    int years_since_immigration = 0;
    CareStatus care_status = CareStatus::none;
    Partnership partnership = Partnership::single;
    PersonId partner_id = no_person;
    bool birth_event_this_period = false;
    bool alive = true;

    friend bool operator==(const Individual&, const Individual&) = default;
};

struct Household {
    HouseholdId household_id = -1;
    DistrictId district_id = 0;
    std::vector<PersonId> member_ids;

    friend bool operator==(const Household&, const Household&) = default;
};

struct District {
    DistrictId district_id = 0;
    std::string name;
    std::int64_t target_size = 0;

    friend bool operator==(const District&, const District&) = default;
};

/// Unit-level population state.
///
/// Individuals and households are kept in ascending id order; ids are handed
/// out monotonically and never reused, which gives O(1) lookup through a dense
/// id-to-position index. Removals only mark records; `compact()` drops them.
class Population {
public:
    Population() = default;
    Population(int year, std::vector<District> districts);

    /// Rebuilds a population from serialized parts. Validates referential closure.
    static Population from_parts(int year, std::vector<District> districts, std::vector<Individual> individuals,
                                 std::vector<Household> households, PersonId next_person_id,
                                 HouseholdId next_household_id);

    int year() const noexcept { return year_; }
    void set_year(int year) noexcept { year_ = year; }

    std::span<const Individual> individuals() const noexcept { return individuals_; }
    std::span<Individual> individuals() noexcept { return individuals_; }
    std::span<const Household> households() const noexcept { return households_; }
    const std::vector<District>& districts() const noexcept { return districts_; }
    std::optional<std::size_t> district_index(DistrictId id) const;

    std::size_t size() const noexcept { return individuals_.size(); }
    bool empty() const noexcept { return individuals_.empty(); }

    const Individual* find_person(PersonId id) const noexcept;
    Individual* find_person(PersonId id) noexcept;
    const Household* find_household(HouseholdId id) const noexcept;

    /// Throws LookupError for unknown ids.
    const Individual& person(PersonId id) const;
    const Household& household(HouseholdId id) const;

    std::optional<std::size_t> person_position(PersonId id) const noexcept;

    HouseholdId add_household(DistrictId district);
    /// Appends a person to `household`; assigns and returns a fresh person id.
    PersonId add_person(Individual person, HouseholdId household);

    /// Moves a person into another household (district follows the household).
    void move_person(PersonId person, HouseholdId to);
    /// Moves a whole household into another district.
    void move_household(HouseholdId household, DistrictId to);
    /// Marks the person dead/removed, detaches them from household and partner.
    void remove_person(PersonId person);
    /// Sets a consistent partnership between two persons.
    void link_partners(PersonId a, PersonId b, Partnership kind);
    /// Dissolves a partnership (both sides become single).
    void unlink_partner(PersonId a);

    /// Drops removed individuals and empty households; rebuilds the indices.
    void compact();

    /// Checks type invariants and referential closure; throws ConsistencyError.
    void validate() const;

    PersonId next_person_id() const noexcept { return next_person_id_; }
    HouseholdId next_household_id() const noexcept { return next_household_id_; }

    friend bool operator==(const Population& a, const Population& b);

private:
    void rebuild_indices();
    Household* mutable_household(HouseholdId id) noexcept;

    int year_ = 0;
    std::vector<District> districts_;
    std::vector<Individual> individuals_;
    std::vector<Household> households_;
    PersonId next_person_id_ = 0;
    HouseholdId next_household_id_ = 0;
    std::vector<std::int32_t> person_index_;
    std::vector<std::int32_t> household_index_;
};

/// Number of co-resident children (< 18, excluding the person) and the youngest one's age.
struct ChildCovariates {
    int n_children = 0;
    std::optional<int> age_youngest;

    friend bool operator==(const ChildCovariates&, const ChildCovariates&) = default;
};

ChildCovariates derive_child_covariates(const Population& pop, PersonId person);

/// Line-delimited record format, one individual / household / district per line.
void write_population(std::ostream& out, const Population& pop);
Population read_population(std::istream& in);
void save_population(const std::string& path, const Population& pop);
Population load_population(const std::string& path);

} // namespace microsa
