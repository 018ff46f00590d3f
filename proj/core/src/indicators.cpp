#include "microsa/indicators.hpp"

#include "microsa/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace microsa {

namespace {

constexpr double missing = std::numeric_limits<double>::quiet_NaN();

double ratio(std::int64_t num, std::int64_t den) {
    return den == 0 ? missing : static_cast<double>(num) / static_cast<double>(den);
}

double unemployment(const std::array<std::int64_t, 2>& lf) { return ratio(lf[1], lf[0] + lf[1]); }

void add_labour(std::array<std::int64_t, 2>& lf, Employment e) {
    if (e == Employment::employed) {
        ++lf[0];
    } else if (e == Employment::unemployed) {
        ++lf[1];
    }
}

void count_household(const Population& pop, const Household& hh, IndicatorCounts& c) {
    ++c.households;
    int youngest_child = std::numeric_limits<int>::max();
    for (PersonId id : hh.member_ids) {
        const Individual& p = pop.person(id);
        if (p.age < child_age_limit) {
            youngest_child = std::min(youngest_child, p.age);
        }
    }
    for (PersonId id : hh.member_ids) {
        const Individual& p = pop.person(id);
        ++c.persons;
        if (p.age < child_age_limit) {
            ++c.under_18;
        } else {
            ++c.adults;
            if (p.partnership != Partnership::single) {
                ++c.adults_partnered;
            }
        }
        add_labour(c.total, p.employment);
        add_labour(p.citizenship == Citizenship::national ? c.national : c.foreign, p.employment);
        add_labour(p.sex == Sex::female ? c.female : c.male, p.employment);
        if (p.sex != Sex::female) {
            continue;
        }
        if (p.age >= fertile_age_min && p.age <= fertile_age_max) {
            const auto a = static_cast<std::size_t>(p.age - fertile_age_min);
            ++c.women_by_age[a];
            if (p.birth_event_this_period) {
                ++c.births_by_age[a];
            }
        }
        if (p.age >= child_age_limit && p.age <= max_working_age && youngest_child <= p.age - 15) {
            ++c.mothers;
            if (p.employment == Employment::employed) {
                ++c.working_mothers;
            }
        }
    }
}

} // namespace

std::size_t indicator_index(std::string_view name) {
    for (std::size_t i = 0; i < indicator_names.size(); ++i) {
        if (indicator_names[i] == name) {
            return i;
        }
    }
    throw LookupError("unknown indicator '" + std::string(name) + "'");
}

IndicatorCounts& IndicatorCounts::operator+=(const IndicatorCounts& o) {
    for (std::size_t i = 0; i < 2; ++i) {
        total[i] += o.total[i];
        national[i] += o.national[i];
        foreign[i] += o.foreign[i];
        female[i] += o.female[i];
        male[i] += o.male[i];
    }
    mothers += o.mothers;
    working_mothers += o.working_mothers;
    adults += o.adults;
    adults_partnered += o.adults_partnered;
    persons += o.persons;
    households += o.households;
    under_18 += o.under_18;
    for (std::size_t a = 0; a < fertile_ages; ++a) {
        women_by_age[a] += o.women_by_age[a];
        births_by_age[a] += o.births_by_age[a];
    }
    return *this;
}

bool is_mother(const Population& pop, const Individual& woman) {
    if (woman.sex != Sex::female || woman.age < child_age_limit || woman.age > max_working_age) {
        return false;
    }
    for (PersonId id : pop.household(woman.household_id).member_ids) {
        const Individual& m = pop.person(id);
        if (m.age < child_age_limit && m.age <= woman.age - 15) {
            return true;
        }
    }
    return false;
}

std::vector<IndicatorCounts> tabulate_districts(const Population& pop) {
    std::vector<IndicatorCounts> out(pop.districts().size());
    for (const Household& hh : pop.households()) {
        if (hh.member_ids.empty()) {
            continue;
        }
        const auto idx = pop.district_index(hh.district_id);
        if (!idx) {
            throw LookupError("household " + std::to_string(hh.household_id) + " in unknown district");
        }
        count_household(pop, hh, out[*idx]);
    }
    return out;
}

IndicatorCounts tabulate(const Population& pop, std::optional<DistrictId> district) {
    if (district && !pop.district_index(*district)) {
        throw LookupError("unknown district " + std::to_string(*district));
    }
    IndicatorCounts c;
    for (const Household& hh : pop.households()) {
        if (!hh.member_ids.empty() && (!district || hh.district_id == *district)) {
            count_household(pop, hh, c);
        }
    }
    return c;
}

IndicatorValues indicator_values(const IndicatorCounts& c) {
    IndicatorValues v{};
    v[0] = unemployment(c.total);
    v[1] = unemployment(c.national);
    v[2] = unemployment(c.foreign);
    v[3] = unemployment(c.female);
    v[4] = unemployment(c.male);
    v[5] = ratio(c.working_mothers, c.mothers);
    v[6] = ratio(c.adults_partnered, c.adults);
    bool any_women = false;
    double tfr = 0.0;
    for (std::size_t a = 0; a < fertile_ages; ++a) {
        if (c.women_by_age[a] > 0) {
            any_women = true;
            tfr += static_cast<double>(c.births_by_age[a]) / static_cast<double>(c.women_by_age[a]);
        }
    }
    v[7] = any_women ? tfr : missing;
    v[8] = ratio(c.persons, c.households);
    v[9] = ratio(c.under_18, c.persons);
    return v;
}

IndicatorValues compute_indicators(const Population& pop, std::optional<DistrictId> district) {
    return indicator_values(tabulate(pop, district));
}

} // namespace microsa
