#include "microsa/demography.hpp"

#include "microsa/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace microsa {

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::size_t position_of(const Population& pop, DistrictId d) {
    const auto idx = pop.district_index(d);
    if (!idx) {
        throw LookupError("unknown district " + std::to_string(d));
    }
    return *idx;
}

template <std::size_t N>
std::size_t draw_category(const std::array<double, N>& shares, double u) {
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < N; ++i) {
        cum += shares[i];
        if (u < cum) {
            return i;
        }
    }
    return N - 1;
}

int uniform_int(RandomStream& rng, int lo, int hi) {
    return lo + static_cast<int>(rng.index(static_cast<std::uint64_t>(hi - lo + 1)));
}

Employment arrival_state(int age, const DemographyParams& p, RandomStream& rng) {
    if (!is_working_age(age)) {
        return Employment::not_eligible;
    }
    if (age < child_age_limit) {
        return Employment::inactive;
    }
    const double u = rng.uniform();
    if (u < p.immigrant_employed) {
        return Employment::employed;
    }
    if (u < p.immigrant_employed + p.immigrant_unemployed) {
        return Employment::unemployed;
    }
    return Employment::inactive;
}

bool has_child(const Population& pop, const Individual& person) {
    for (PersonId id : pop.household(person.household_id).member_ids) {
        if (id != person.person_id && pop.person(id).age < child_age_limit) {
            return true;
        }
    }
    return false;
}

bool in_parental_home(const Population& pop, const Individual& person) {
    const auto& members = pop.household(person.household_id).member_ids;
    if (members.size() < 2) {
        return false;
    }
    return std::any_of(members.begin(), members.end(),
                       [&](PersonId id) { return pop.person(id).age >= person.age + 15; });
}

} // namespace

std::string_view to_string(MigrationVariant v) { return v == MigrationVariant::full ? "full" : "selected"; }

MigrationVariant parse_migration_variant(std::string_view s) {
    if (s == "full") {
        return MigrationVariant::full;
    }
    if (s == "selected") {
        return MigrationVariant::selected;
    }
    throw ConfigError("unknown migration variant '" + std::string(s) + "'");
}

double DemographyParams::immigration_multiplier(int year, bool projection, MigrationVariant variant) const {
    if (!projection) {
        for (const auto& h : immigration_history) {
            if (h.year == year) {
                return h.multiplier;
            }
        }
        return 1.0;
    }
    double sum = 0.0;
    int n = 0;
    for (const auto& h : immigration_history) {
        if (variant == MigrationVariant::selected && h.exceptional) {
            continue;
        }
        sum += h.multiplier;
        ++n;
    }
    return n == 0 ? 1.0 : sum / n;
}

DemographyParams DemographyParams::none() {
    DemographyParams p;
    p.mortality_intercept = -std::numeric_limits<double>::infinity();
    p.fertility_peak = 0.0;
    p.emigration_national = 0.0;
    p.emigration_foreign = 0.0;
    p.internal_move = 0.0;
    p.immigration_rate = 0.0;
    p.naturalization_rate = 0.0;
    p.education_low_to_medium = 0.0;
    p.education_medium_to_high = 0.0;
    p.partnership_formation = 0.0;
    p.separation_partnered = 0.0;
    p.separation_married = 0.0;
    p.marriage = 0.0;
    p.leave_home = 0.0;
    p.care_intercept = -std::numeric_limits<double>::infinity();
    p.care_recovery = 0.0;
    return p;
}

std::vector<PersonId> district_members(const Population& pop, DistrictId district) {
    std::vector<PersonId> out;
    for (const Individual& p : pop.individuals()) {
        if (p.alive && p.district_id == district) {
            out.push_back(p.person_id);
        }
    }
    return out;
}

void apply_mortality(Population& pop, DistrictId d, const DemographyParams& p, RandomStream& rng,
                     std::vector<DistrictAccounting>& acc) {
    auto& a = acc[position_of(pop, d)];
    for (PersonId id : district_members(pop, d)) {
        const Individual& person = pop.person(id);
        double q = std::exp(p.mortality_intercept + p.mortality_slope * person.age);
        if (person.sex == Sex::male) {
            q *= p.mortality_male_factor;
        }
        if (person.care_status == CareStatus::receiving_care) {
            q *= p.mortality_care_factor;
        }
        if (rng.uniform() < std::min(q, 1.0)) {
            pop.remove_person(id);
            ++a.deaths;
        }
    }
}

void apply_births(Population& pop, DistrictId d, const DemographyParams& p, RandomStream& rng,
                  std::vector<DistrictAccounting>& acc) {
    auto& a = acc[position_of(pop, d)];
    for (PersonId id : district_members(pop, d)) {
        const Individual mother = pop.person(id);
        if (mother.sex != Sex::female || mother.age < 15 || mother.age > 49) {
            continue;
        }
        const double z = (mother.age - p.fertility_mode_age) / p.fertility_width;
        double f = p.fertility_peak * std::exp(-z * z);
        f *= mother.partnership == Partnership::single ? p.fertility_single_factor : p.fertility_partnered_factor;
        if (mother.employment == Employment::employed) {
            f *= p.fertility_employed_factor;
        }
        if (!(rng.uniform() < f)) {
            continue;
        }
        Individual child;
        child.sex = rng.uniform() < p.male_birth_share ? Sex::male : Sex::female;
        child.age = 0;
        child.employment = Employment::not_eligible;
        child.education = Education::low;
        child.citizenship = mother.citizenship;
        pop.add_person(child, mother.household_id);
        ++a.births;
        pop.find_person(id)->birth_event_this_period = true;
        if (mother.partner_id != no_person) {
            pop.find_person(mother.partner_id)->birth_event_this_period = true;
        }
    }
}

int add_immigrant_household(Population& pop, DistrictId d, const DemographyParams& p, RandomStream& rng) {
    const std::size_t size = draw_category(p.immigrant_household_sizes, rng.uniform()) + 1;
    const HouseholdId hh = pop.add_household(d);
    auto make = [&](Sex sex, int age) {
        Individual person;
        person.sex = sex;
        person.age = age;
        person.citizenship = Citizenship::foreign;
        person.immigrant = true;
        person.years_since_immigration = 0;
        person.education = age < 16 ? Education::low
                                    : static_cast<Education>(draw_category(p.immigrant_education, rng.uniform()));
        person.employment = arrival_state(age, p, rng);
        return pop.add_person(person, hh);
    };
    const Sex head_sex = rng.uniform() < 0.55 ? Sex::male : Sex::female;
    const int head_age = uniform_int(rng, 20, 44);
    const PersonId head = make(head_sex, head_age);
    int mother_age = head_sex == Sex::female ? head_age : -1;
    std::size_t added = 1;
    if (size >= 2 && rng.uniform() < 0.7) {
        const Sex other = head_sex == Sex::female ? Sex::male : Sex::female;
        const int age = std::max(18, head_age + uniform_int(rng, -3, 3));
        const PersonId partner = make(other, age);
        pop.link_partners(head, partner,
                          rng.uniform() < 0.7 ? Partnership::married_cohabiting : Partnership::partnered_cohabiting);
        if (other == Sex::female) {
            mother_age = age;
        }
        ++added;
    }
    const int parent_age = mother_age > 0 ? mother_age : head_age;
    for (; added < size; ++added) {
        make(rng.uniform() < 0.5 ? Sex::female : Sex::male, uniform_int(rng, 0, std::min(14, parent_age - 18)));
    }
    return static_cast<int>(size);
}

void apply_migration(Population& pop, DistrictId d, const std::vector<HouseholdId>& households,
                     std::int64_t residents, double immigration_multiplier, const DemographyParams& p,
                     RandomStream& rng, std::vector<DistrictAccounting>& acc) {
    const std::size_t origin = position_of(pop, d);
    const auto& districts = pop.districts();
    // Moving probability scales with the weight of the other districts, so
    // expected flows between two districts are symmetric in their sizes.
    double other_weight = 0.0;
    double total_weight = 0.0;
    for (std::size_t i = 0; i < districts.size(); ++i) {
        total_weight += static_cast<double>(districts[i].target_size);
        if (i != origin) {
            other_weight += static_cast<double>(districts[i].target_size);
        }
    }
    const double move = total_weight > 0.0 ? p.internal_move * other_weight / total_weight : 0.0;
    for (HouseholdId id : households) {
        const Household* hh = pop.find_household(id);
        if (hh == nullptr || hh->member_ids.empty() || hh->district_id != d) {
            continue;
        }
        const auto n = static_cast<std::int64_t>(hh->member_ids.size());
        const Individual& head = pop.person(hh->member_ids.front());
        const double emigrate =
            head.citizenship == Citizenship::foreign ? p.emigration_foreign : p.emigration_national;
        const double u = rng.uniform();
        if (u < emigrate) {
            const std::vector<PersonId> members = hh->member_ids;
            for (PersonId m : members) {
                pop.remove_person(m);
            }
            acc[origin].emigrants += n;
            continue;
        }
        if (u < emigrate + move && other_weight > 0.0) {
            double target = rng.uniform() * other_weight;
            std::size_t dest = origin;
            for (std::size_t i = 0; i < districts.size(); ++i) {
                if (i == origin) {
                    continue;
                }
                dest = i;
                target -= static_cast<double>(districts[i].target_size);
                if (target < 0.0) {
                    break;
                }
            }
            pop.move_household(id, districts[dest].district_id);
            acc[origin].moved_out += n;
            acc[dest].moved_in += n;
        }
    }
    const double expected = p.immigration_rate * static_cast<double>(residents) * immigration_multiplier;
    auto arrivals = static_cast<std::int64_t>(std::floor(expected));
    if (rng.uniform() < expected - std::floor(expected)) {
        ++arrivals;
    }
    for (std::int64_t i = 0; i < arrivals; ++i) {
        acc[origin].immigrants += add_immigrant_household(pop, d, p, rng);
    }
}

void apply_citizenship(Population& pop, DistrictId d, const DemographyParams& p, RandomStream& rng) {
    for (PersonId id : district_members(pop, d)) {
        Individual& person = *pop.find_person(id);
        if (person.citizenship != Citizenship::foreign) {
            continue;
        }
        const int residence = person.immigrant ? person.years_since_immigration : person.age;
        if (residence >= p.naturalization_min_years && rng.uniform() < p.naturalization_rate) {
            person.citizenship = Citizenship::national;
        }
    }
}

void apply_education(Population& pop, DistrictId d, const DemographyParams& p, RandomStream& rng) {
    for (PersonId id : district_members(pop, d)) {
        Individual& person = *pop.find_person(id);
        if (person.education == Education::low && person.age >= 16 && person.age <= 19) {
            if (rng.uniform() < p.education_low_to_medium) {
                person.education = Education::medium;
            }
        } else if (person.education == Education::medium && person.age >= 19 && person.age <= 29) {
            if (rng.uniform() < p.education_medium_to_high) {
                person.education = Education::high;
            }
        }
    }
}

void apply_partnership(Population& pop, DistrictId d, const DemographyParams& p, RandomStream& rng) {
    // Separation and marriage, visiting each couple once through the female partner.
    for (PersonId id : district_members(pop, d)) {
        const Individual person = pop.person(id);
        if (person.partnership == Partnership::single || person.sex != Sex::female) {
            continue;
        }
        const bool married = person.partnership == Partnership::married_cohabiting;
        const double u = rng.uniform();
        if (u < (married ? p.separation_married : p.separation_partnered)) {
            const PersonId partner = person.partner_id;
            pop.unlink_partner(id);
            pop.move_person(partner, pop.add_household(d));
        } else if (!married && u < p.separation_partnered + p.marriage) {
            pop.link_partners(id, person.partner_id, Partnership::married_cohabiting);
        }
    }
    // Young adults leaving the parental home.
    for (PersonId id : district_members(pop, d)) {
        const Individual& person = pop.person(id);
        if (person.partnership != Partnership::single || person.age < 18 || person.age > 30 ||
            !in_parental_home(pop, person)) {
            continue;
        }
        if (rng.uniform() < p.leave_home) {
            pop.move_person(id, pop.add_household(d));
        }
    }
    // Union formation: seekers of each sex are matched in age order.
    std::vector<std::pair<int, PersonId>> women;
    std::vector<std::pair<int, PersonId>> men;
    for (PersonId id : district_members(pop, d)) {
        const Individual& person = pop.person(id);
        if (person.partnership != Partnership::single || person.age < 18 || person.age > 60) {
            continue;
        }
        if (!(rng.uniform() < p.partnership_formation)) {
            continue;
        }
        if (person.sex == Sex::female) {
            women.emplace_back(person.age, id);
        } else if (!has_child(pop, person)) {
            men.emplace_back(person.age, id);
        }
    }
    std::sort(women.begin(), women.end());
    std::sort(men.begin(), men.end());
    const std::size_t pairs = std::min(women.size(), men.size());
    for (std::size_t i = 0; i < pairs; ++i) {
        const PersonId woman = women[i].second;
        const PersonId man = men[i].second;
        pop.move_person(man, pop.person(woman).household_id);
        pop.link_partners(woman, man, Partnership::partnered_cohabiting);
    }
}

void apply_care(Population& pop, DistrictId d, const DemographyParams& p, RandomStream& rng) {
    for (PersonId id : district_members(pop, d)) {
        Individual& person = *pop.find_person(id);
        const double u = rng.uniform();
        if (person.care_status == CareStatus::none) {
            if (u < logistic(p.care_intercept + p.care_slope * person.age)) {
                person.care_status = CareStatus::receiving_care;
            }
        } else if (u < p.care_recovery) {
            person.care_status = CareStatus::none;
        }
    }
}

void apply_aging(Population& pop) {
    for (Individual& person : pop.individuals()) {
        if (!person.alive) {
            continue;
        }
        ++person.age;
        if (person.immigrant) {
            ++person.years_since_immigration;
        }
        if (person.age == min_working_age) {
            person.employment = Employment::inactive;
        } else if (person.age > max_working_age) {
            person.employment = Employment::not_eligible;
        }
    }
}

void reset_period_flags(Population& pop) {
    for (Individual& person : pop.individuals()) {
        person.birth_event_this_period = false;
    }
}

} // namespace microsa
