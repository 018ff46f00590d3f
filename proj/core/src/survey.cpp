#include "microsa/error.hpp"
#include "microsa/random.hpp"
#include "microsa/transmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace microsa {

Survey build_survey(const Population& previous, const Population& current, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw ConfigError("survey sampling fraction must lie in (0, 1], got " + std::to_string(fraction));
    }
    const auto households = current.households();
    const std::size_t n_households = households.size();
    const auto n_sample = std::min<std::size_t>(
        n_households, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n_households))));

    std::vector<std::size_t> order(n_households);
    std::iota(order.begin(), order.end(), std::size_t{0});
    RandomStream rng(seed);
    for (std::size_t i = 0; i < n_sample; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.index(n_households - i));
        std::swap(order[i], order[j]);
    }
    order.resize(n_sample);
    std::sort(order.begin(), order.end());

    Survey survey;
    for (std::size_t pos : order) {
        std::vector<PersonId> members = households[pos].member_ids;
        std::sort(members.begin(), members.end());
        for (PersonId id : members) {
            const Individual& person = current.person(id);
            if (!is_working_age(person.age) || person.employment == Employment::not_eligible) {
                continue;
            }
            const Individual* before = previous.find_person(id);
            if (before == nullptr) {
                continue;
            }
            SurveyRecord rec;
            rec.person_id = id;
            rec.household_id = person.household_id;
            rec.year = current.year();
            rec.covariates = covariates_of(current, person);
            rec.covariates.previous = entry_state(before->employment);
            rec.outcome = person.employment;
            survey.push_back(std::move(rec));
        }
    }
    return survey;
}

} // namespace microsa
