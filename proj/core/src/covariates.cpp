#include "microsa/covariates.hpp"

#include "microsa/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace microsa {

namespace {

constexpr std::array<std::string_view, 2> model_type_names{"mnl", "rate_table"};
constexpr std::array<std::string_view, 3> complexity_names{"low", "medium", "high"};
constexpr std::array<std::string_view, 2> period_names{"period_A", "period_B"};

template <typename Enum, std::size_t N>
Enum parse_name(std::string_view s, const std::array<std::string_view, N>& names, const char* what) {
    for (std::size_t i = 0; i < N; ++i) {
        if (names[i] == s) {
            return static_cast<Enum>(i);
        }
    }
    throw ConfigError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

double cube_plus(double v) { return v > 0.0 ? v * v * v : 0.0; }

[[noreturn]] void missing(const char* name) {
    throw SpecificationError(std::string("missing covariate '") + name + "' for the model tier");
}

template <typename T>
T require(const std::optional<T>& v, const char* name) {
    if (!v) {
        missing(name);
    }
    return *v;
}

} // namespace

std::string_view to_string(ModelType v) { return model_type_names[static_cast<std::size_t>(v)]; }
std::string_view to_string(Complexity v) { return complexity_names[static_cast<std::size_t>(v)]; }
std::string_view to_string(Period v) { return period_names[static_cast<std::size_t>(v)]; }
ModelType parse_model_type(std::string_view s) { return parse_name<ModelType>(s, model_type_names, "model type"); }
Complexity parse_complexity(std::string_view s) { return parse_name<Complexity>(s, complexity_names, "complexity"); }
Period parse_period(std::string_view s) { return parse_name<Period>(s, period_names, "period"); }

void SplineBasis::evaluate(double x, std::span<double> out) const {
    const std::size_t k = knots.size();
    const double u = x / scale;
    out[0] = u;
    if (k < 3) {
        return;
    }
    const double last = knots[k - 1] / scale;
    const double second_last = knots[k - 2] / scale;
    const double d_last = (cube_plus(u - second_last) - cube_plus(u - last)) / (last - second_last);
    for (std::size_t j = 0; j + 2 < k; ++j) {
        const double kj = knots[j] / scale;
        out[j + 1] = (cube_plus(u - kj) - cube_plus(u - last)) / (last - kj) - d_last;
    }
}

BasisDefinition BasisDefinition::standard() {
    BasisDefinition b;
    b.age = SplineBasis{{25.0, 35.0, 45.0, 55.0, 65.0}, 10.0};
    b.years_since_immigration = SplineBasis{{2.0, 5.0, 10.0}, 1.0};
    b.age_youngest_child = SplineBasis{{2.0, 5.0, 10.0}, 1.0};
    return b;
}

std::size_t design_size(Complexity tier) noexcept {
    switch (tier) {
    case Complexity::low:
        return 5;
    case Complexity::medium:
        return 13;
    case Complexity::high:
        return 18;
    }
    return 0;
}

std::vector<std::string> design_names(Complexity tier) {
    static const std::vector<std::string> all{
        "intercept", "age_1",      "age_2",      "age_3",   "age_4",   "birth_event",
        "foreign",   "immigrant",  "ysi_1",      "ysi_2",   "edu_medium", "edu_high",
        "care",      "partnered",  "married",    "n_children", "youngest_1", "youngest_2"};
    return {all.begin(), all.begin() + static_cast<std::ptrdiff_t>(design_size(tier))};
}

void design_row(const BasisDefinition& basis, const CovariateInput& x, Complexity tier, std::span<double> out) {
    if (!is_working_age(x.age)) {
        throw SpecificationError("covariates for age " + std::to_string(x.age) +
                                 " outside the eligible range 15-74");
    }
    out[0] = 1.0;
    basis.age.evaluate(static_cast<double>(x.age), out.subspan(1, 4));
    if (tier == Complexity::low) {
        return;
    }
    out[5] = require(x.birth_event, "birth_event") ? 1.0 : 0.0;
    out[6] = require(x.citizenship, "citizenship") == Citizenship::foreign ? 1.0 : 0.0;
    const bool immigrant = require(x.immigrant, "immigrant");
    out[7] = immigrant ? 1.0 : 0.0;
    const int ysi = require(x.years_since_immigration, "years_since_immigration");
    basis.years_since_immigration.evaluate(immigrant ? static_cast<double>(ysi) : 0.0, out.subspan(8, 2));
    const Education edu = require(x.education, "education");
    out[10] = edu == Education::medium ? 1.0 : 0.0;
    out[11] = edu == Education::high ? 1.0 : 0.0;
    out[12] = require(x.care_status, "care_status") == CareStatus::receiving_care ? 1.0 : 0.0;
    if (tier == Complexity::medium) {
        return;
    }
    const Partnership ps = require(x.partnership, "partnership");
    out[13] = ps == Partnership::partnered_cohabiting ? 1.0 : 0.0;
    out[14] = ps == Partnership::married_cohabiting ? 1.0 : 0.0;
    const int n_children = require(x.n_children, "n_children");
    out[15] = static_cast<double>(n_children);
    if (n_children > 0) {
        basis.age_youngest_child.evaluate(static_cast<double>(require(x.age_youngest_child, "age_youngest_child")),
                                          out.subspan(16, 2));
    } else {
        out[16] = 0.0;
        out[17] = 0.0;
    }
}

int block_index(Sex sex, Employment previous) {
    if (previous == Employment::not_eligible) {
        throw SpecificationError("previous state not_eligible has no transition block");
    }
    return static_cast<int>(sex) * 3 + static_cast<int>(previous);
}

std::string block_name(int block) {
    const auto sex = static_cast<Sex>(block / 3);
    const auto prev = static_cast<Employment>(block % 3);
    return std::string(to_string(sex)) + "/" + std::string(to_string(prev));
}

CovariateInput covariates_of(const Population& pop, const Individual& person) {
    CovariateInput x;
    x.sex = person.sex;
    x.previous = entry_state(person.employment);
    x.age = person.age;
    x.birth_event = person.birth_event_this_period;
    x.citizenship = person.citizenship;
    x.immigrant = person.immigrant;
    x.years_since_immigration = person.years_since_immigration;
    x.education = person.education;
    x.care_status = person.care_status;
    x.partnership = person.partnership;
    int n_children = 0;
    int youngest = 0;
    if (const Household* hh = pop.find_household(person.household_id)) {
        for (PersonId id : hh->member_ids) {
            if (id == person.person_id) {
                continue;
            }
            const Individual* m = pop.find_person(id);
            if (m != nullptr && m->alive && m->age < child_age_limit) {
                youngest = n_children == 0 ? m->age : std::min(youngest, m->age);
                ++n_children;
            }
        }
    }
    x.n_children = n_children;
    if (n_children > 0) {
        x.age_youngest_child = youngest;
    }
    return x;
}

} // namespace microsa
