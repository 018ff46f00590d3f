#include "microsa/population.hpp"

#include "microsa/error.hpp"

#include <algorithm>
#include <array>
#include <string>
#include <utility>

namespace microsa {

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::array<std::string_view, N>& names, const char* what) {
    for (std::size_t i = 0; i < N; ++i) {
        if (names[i] == s) {
            return static_cast<Enum>(i);
        }
    }
    throw ConfigError(std::string("unknown ") + what + " value '" + std::string(s) + "'");
}

constexpr std::array<std::string_view, 2> sex_names{"female", "male"};
constexpr std::array<std::string_view, 4> employment_names{"employed", "unemployed", "inactive", "not_eligible"};
constexpr std::array<std::string_view, 3> education_names{"low", "medium", "high"};
constexpr std::array<std::string_view, 2> citizenship_names{"national", "foreign"};
constexpr std::array<std::string_view, 2> care_names{"none", "receiving_care"};
constexpr std::array<std::string_view, 3> partnership_names{"single", "partnered_cohabiting", "married_cohabiting"};

[[noreturn]] void inconsistent(const std::string& msg) { throw ConsistencyError("population consistency: " + msg); }

} // namespace

std::string_view to_string(Sex v) { return sex_names[static_cast<std::size_t>(v)]; }
std::string_view to_string(Employment v) { return employment_names[static_cast<std::size_t>(v)]; }
std::string_view to_string(Education v) { return education_names[static_cast<std::size_t>(v)]; }
std::string_view to_string(Citizenship v) { return citizenship_names[static_cast<std::size_t>(v)]; }
std::string_view to_string(CareStatus v) { return care_names[static_cast<std::size_t>(v)]; }
std::string_view to_string(Partnership v) { return partnership_names[static_cast<std::size_t>(v)]; }

Sex parse_sex(std::string_view s) { return parse_enum<Sex>(s, sex_names, "sex"); }
Employment parse_employment(std::string_view s) { return parse_enum<Employment>(s, employment_names, "employment"); }
Education parse_education(std::string_view s) { return parse_enum<Education>(s, education_names, "education"); }
Citizenship parse_citizenship(std::string_view s) {
    return parse_enum<Citizenship>(s, citizenship_names, "citizenship");
}
CareStatus parse_care_status(std::string_view s) { return parse_enum<CareStatus>(s, care_names, "care status"); }
Partnership parse_partnership(std::string_view s) {
    return parse_enum<Partnership>(s, partnership_names, "partnership");
}

Population::Population(int year, std::vector<District> districts) : year_(year), districts_(std::move(districts)) {}

Population Population::from_parts(int year, std::vector<District> districts, std::vector<Individual> individuals,
                                  std::vector<Household> households, PersonId next_person_id,
                                  HouseholdId next_household_id) {
    Population pop(year, std::move(districts));
    pop.individuals_ = std::move(individuals);
    pop.households_ = std::move(households);
    pop.next_person_id_ = next_person_id;
    pop.next_household_id_ = next_household_id;
    for (std::size_t i = 1; i < pop.individuals_.size(); ++i) {
        if (pop.individuals_[i - 1].person_id >= pop.individuals_[i].person_id) {
            inconsistent("person ids not strictly ascending");
        }
    }
    for (std::size_t i = 1; i < pop.households_.size(); ++i) {
        if (pop.households_[i - 1].household_id >= pop.households_[i].household_id) {
            inconsistent("household ids not strictly ascending");
        }
    }
    if (!pop.individuals_.empty() && pop.individuals_.back().person_id >= next_person_id) {
        inconsistent("next person id not beyond the largest id");
    }
    if (!pop.households_.empty() && pop.households_.back().household_id >= next_household_id) {
        inconsistent("next household id not beyond the largest id");
    }
    pop.rebuild_indices();
    pop.validate();
    return pop;
}

std::optional<std::size_t> Population::district_index(DistrictId id) const {
    for (std::size_t i = 0; i < districts_.size(); ++i) {
        if (districts_[i].district_id == id) {
            return i;
        }
    }
    return std::nullopt;
}

std::optional<std::size_t> Population::person_position(PersonId id) const noexcept {
    if (id < 0 || id >= static_cast<PersonId>(person_index_.size())) {
        return std::nullopt;
    }
    const auto pos = person_index_[static_cast<std::size_t>(id)];
    if (pos < 0) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(pos);
}

const Individual* Population::find_person(PersonId id) const noexcept {
    const auto pos = person_position(id);
    return pos ? &individuals_[*pos] : nullptr;
}

Individual* Population::find_person(PersonId id) noexcept {
    const auto pos = person_position(id);
    return pos ? &individuals_[*pos] : nullptr;
}

const Household* Population::find_household(HouseholdId id) const noexcept {
    if (id < 0 || id >= static_cast<HouseholdId>(household_index_.size())) {
        return nullptr;
    }
    const auto pos = household_index_[static_cast<std::size_t>(id)];
    return pos < 0 ? nullptr : &households_[static_cast<std::size_t>(pos)];
}

Household* Population::mutable_household(HouseholdId id) noexcept {
    return const_cast<Household*>(std::as_const(*this).find_household(id));
}

const Individual& Population::person(PersonId id) const {
    const auto* p = find_person(id);
    if (p == nullptr) {
        throw LookupError("unknown person id " + std::to_string(id));
    }
    return *p;
}

const Household& Population::household(HouseholdId id) const {
    const auto* h = find_household(id);
    if (h == nullptr) {
        throw LookupError("unknown household id " + std::to_string(id));
    }
    return *h;
}

HouseholdId Population::add_household(DistrictId district) {
    const HouseholdId id = next_household_id_++;
    households_.push_back(Household{id, district, {}});
    household_index_.resize(static_cast<std::size_t>(next_household_id_), -1);
    household_index_[static_cast<std::size_t>(id)] = static_cast<std::int32_t>(households_.size() - 1);
    return id;
}

PersonId Population::add_person(Individual person, HouseholdId household) {
    Household* hh = mutable_household(household);
    if (hh == nullptr) {
        throw LookupError("unknown household id " + std::to_string(household));
    }
    person.person_id = next_person_id_++;
    person.household_id = household;
    person.district_id = hh->district_id;
    hh->member_ids.push_back(person.person_id);
    individuals_.push_back(person);
    person_index_.resize(static_cast<std::size_t>(next_person_id_), -1);
    person_index_[static_cast<std::size_t>(person.person_id)] = static_cast<std::int32_t>(individuals_.size() - 1);
    return person.person_id;
}

void Population::move_person(PersonId person, HouseholdId to) {
    Individual* p = find_person(person);
    Household* dest = mutable_household(to);
    if (p == nullptr || dest == nullptr) {
        throw LookupError("move_person: unknown person or household");
    }
    if (p->household_id == to) {
        return;
    }
    if (Household* src = mutable_household(p->household_id)) {
        auto& m = src->member_ids;
        m.erase(std::remove(m.begin(), m.end(), person), m.end());
    }
    dest->member_ids.push_back(person);
    p->household_id = to;
    p->district_id = dest->district_id;
}

void Population::move_household(HouseholdId household, DistrictId to) {
    Household* hh = mutable_household(household);
    if (hh == nullptr) {
        throw LookupError("move_household: unknown household " + std::to_string(household));
    }
    hh->district_id = to;
    for (PersonId id : hh->member_ids) {
        if (Individual* p = find_person(id)) {
            p->district_id = to;
        }
    }
}

void Population::remove_person(PersonId person) {
    Individual* p = find_person(person);
    if (p == nullptr || !p->alive) {
        return;
    }
    if (p->partner_id != no_person) {
        unlink_partner(person);
    }
    if (Household* hh = mutable_household(p->household_id)) {
        auto& m = hh->member_ids;
        m.erase(std::remove(m.begin(), m.end(), person), m.end());
    }
    p->alive = false;
}

void Population::link_partners(PersonId a, PersonId b, Partnership kind) {
    Individual* pa = find_person(a);
    Individual* pb = find_person(b);
    if (pa == nullptr || pb == nullptr) {
        throw LookupError("link_partners: unknown person");
    }
    pa->partner_id = b;
    pb->partner_id = a;
    pa->partnership = kind;
    pb->partnership = kind;
}

void Population::unlink_partner(PersonId a) {
    Individual* pa = find_person(a);
    if (pa == nullptr) {
        return;
    }
    if (Individual* pb = find_person(pa->partner_id)) {
        pb->partner_id = no_person;
        pb->partnership = Partnership::single;
    }
    pa->partner_id = no_person;
    pa->partnership = Partnership::single;
}

void Population::compact() {
    std::erase_if(individuals_, [](const Individual& p) { return !p.alive; });
    std::erase_if(households_, [](const Household& h) { return h.member_ids.empty(); });
    rebuild_indices();
}

void Population::rebuild_indices() {
    person_index_.assign(static_cast<std::size_t>(next_person_id_), -1);
    for (std::size_t i = 0; i < individuals_.size(); ++i) {
        person_index_[static_cast<std::size_t>(individuals_[i].person_id)] = static_cast<std::int32_t>(i);
    }
    household_index_.assign(static_cast<std::size_t>(next_household_id_), -1);
    for (std::size_t i = 0; i < households_.size(); ++i) {
        household_index_[static_cast<std::size_t>(households_[i].household_id)] = static_cast<std::int32_t>(i);
    }
}

void Population::validate() const {
    std::size_t members = 0;
    for (const auto& h : households_) {
        if (h.member_ids.empty()) {
            inconsistent("empty household " + std::to_string(h.household_id));
        }
        if (!district_index(h.district_id)) {
            inconsistent("household " + std::to_string(h.household_id) + " in unknown district");
        }
        for (PersonId id : h.member_ids) {
            const Individual* p = find_person(id);
            if (p == nullptr || !p->alive) {
                inconsistent("household " + std::to_string(h.household_id) + " lists missing person " +
                             std::to_string(id));
            }
            if (p->household_id != h.household_id) {
                inconsistent("person " + std::to_string(id) + " listed in household " +
                             std::to_string(h.household_id) + " but references " + std::to_string(p->household_id));
            }
            if (p->district_id != h.district_id) {
                inconsistent("person " + std::to_string(id) + " district differs from its household");
            }
        }
        members += h.member_ids.size();
    }
    if (members != individuals_.size()) {
        inconsistent("household membership does not cover every individual exactly once");
    }
    for (const auto& p : individuals_) {
        if (!p.alive) {
            inconsistent("removed person " + std::to_string(p.person_id) + " not compacted");
        }
        if (p.age < 0) {
            inconsistent("negative age for person " + std::to_string(p.person_id));
        }
        if ((p.employment == Employment::not_eligible) == is_working_age(p.age)) {
            inconsistent("eligibility rule violated for person " + std::to_string(p.person_id) + " (age " +
                         std::to_string(p.age) + ", " + std::string(to_string(p.employment)) + ")");
        }
        if (p.years_since_immigration < 0 || p.years_since_immigration > p.age ||
            (!p.immigrant && p.years_since_immigration != 0)) {
            inconsistent("years since immigration invalid for person " + std::to_string(p.person_id));
        }
        if (p.partnership == Partnership::single) {
            if (p.partner_id != no_person) {
                inconsistent("single person " + std::to_string(p.person_id) + " has a partner id");
            }
        } else {
            const Individual* q = find_person(p.partner_id);
            if (q == nullptr || !q->alive || q->partner_id != p.person_id || q->household_id != p.household_id ||
                q->partnership != p.partnership) {
                inconsistent("partnership of person " + std::to_string(p.person_id) + " is not reciprocal");
            }
        }
    }
}

bool operator==(const Population& a, const Population& b) {
    return a.year_ == b.year_ && a.districts_ == b.districts_ && a.individuals_ == b.individuals_ &&
           a.households_ == b.households_ && a.next_person_id_ == b.next_person_id_ &&
           a.next_household_id_ == b.next_household_id_;
}

ChildCovariates derive_child_covariates(const Population& pop, PersonId person) {
    const Individual& self = pop.person(person);
    const Household& hh = pop.household(self.household_id);
    ChildCovariates out;
    for (PersonId id : hh.member_ids) {
        if (id == person) {
            continue;
        }
        const Individual& m = pop.person(id);
        if (m.age < child_age_limit) {
            ++out.n_children;
            if (!out.age_youngest || m.age < *out.age_youngest) {
                out.age_youngest = m.age;
            }
        }
    }
    return out;
}

} // namespace microsa
