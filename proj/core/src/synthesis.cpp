#include "microsa/synthesis.hpp"

#include "microsa/error.hpp"
#include "microsa/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

namespace microsa {

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double square(double x) { return x * x; }

/// Least-squares coefficients of `f` on the given basis columns over `points`.
std::vector<double> project(const std::vector<double>& points, const std::function<void(double, double*)>& columns,
                            std::size_t n_columns, const std::function<double(double)>& f) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(n_columns));
    Eigen::VectorXd y(static_cast<Eigen::Index>(points.size()));
    std::vector<double> row(n_columns);
    for (std::size_t i = 0; i < points.size(); ++i) {
        columns(points[i], row.data());
        for (std::size_t j = 0; j < n_columns; ++j) {
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
        }
        y(static_cast<Eigen::Index>(i)) = f(points[i]);
    }
    const Eigen::VectorXd b = x.colPivHouseholderQr().solve(y);
    return {b.data(), b.data() + b.size()};
}

std::vector<double> range(int lo, int hi) {
    std::vector<double> out;
    for (int v = lo; v <= hi; ++v) {
        out.push_back(v);
    }
    return out;
}

/// Age profile of a logit (outcome 1 = unemployed, 2 = inactive) per (sex, previous state).
double age_profile(Sex sex, Employment prev, int outcome, double a) {
    const double q = square((a - 40.0) / 15.0);
    const bool female = sex == Sex::female;
    switch (prev) {
    case Employment::employed:
        if (outcome == 1) {
            return -3.7 + 0.5 * q + 0.8 * logistic((22.0 - a) / 2.0);
        }
        return -3.7 + (female ? 0.2 : 0.0) + 0.6 * q + 3.8 * logistic((a - 62.0) / 2.0) +
               1.5 * logistic((21.0 - a) / 1.5);
    case Employment::unemployed:
        if (outcome == 1) {
            return -0.1 + 0.3 * q + 0.5 * logistic((a - 58.0) / 3.0);
        }
        return -0.9 + (female ? 0.2 : 0.0) + 0.6 * q + 3.0 * logistic((a - 62.0) / 2.0) +
               1.0 * logistic((21.0 - a) / 1.5);
    default:
        if (outcome == 1) {
            return -0.6 + 0.3 * logistic((30.0 - a) / 5.0) + 0.2 * q;
        }
        return 0.6 + (female ? 0.3 : 0.0) + 1.2 * q + 3.5 * logistic((a - 60.0) / 2.5) +
               2.5 * logistic((21.0 - a) / 2.0);
    }
}

/// High-tier coefficients (length 18) of one outcome logit.
std::vector<double> truth_coefficients(const BasisDefinition& basis, Sex sex, Employment prev, int outcome) {
    std::vector<double> beta(design_size(Complexity::high), 0.0);
    const bool female = sex == Sex::female;
    const bool u = outcome == 1;

    const auto age = project(
        range(min_working_age, max_working_age),
        [&](double a, double* out) {
            out[0] = 1.0;
            basis.age.evaluate(a, std::span<double>(out + 1, 4));
        },
        5, [&](double a) { return age_profile(sex, prev, outcome, a); });
    std::copy(age.begin(), age.end(), beta.begin());

    if (female && !u) {
        beta[5] = prev == Employment::employed ? 1.5 : 0.8;  // birth event
    }
    beta[6] = u ? 0.45 : 0.35;  // foreign
    const auto ysi = project(
        range(0, 40),
        [&](double t, double* out) {
            out[0] = 1.0;
            basis.years_since_immigration.evaluate(t, std::span<double>(out + 1, 2));
        },
        3, [&](double t) { return u ? 0.8 * std::exp(-t / 4.0) : 0.1 + 0.9 * std::exp(-t / 5.0); });
    std::copy(ysi.begin(), ysi.end(), beta.begin() + 7);
    beta[10] = u ? -0.45 : -0.35;  // medium education
    beta[11] = u ? -0.90 : -0.75;  // high education
    beta[12] = u ? 0.3 : 0.8;      // care
    if (female) {
        beta[13] = u ? 0.0 : 0.10;
        beta[14] = u ? 0.0 : 0.25;
        beta[15] = u ? 0.0 : 0.15;
        const auto youngest = project(
            range(0, child_age_limit - 1),
            [&](double y, double* out) { basis.age_youngest_child.evaluate(y, std::span<double>(out, 2)); }, 2,
            [&](double y) { return u ? 0.0 : 0.8 * std::exp(-y / 3.0); });
        beta[16] = youngest[0];
        beta[17] = youngest[1];
    } else {
        beta[13] = u ? -0.20 : 0.0;
        beta[14] = u ? -0.35 : -0.10;
    }
    return beta;
}

std::shared_ptr<const FittedModel> truth_model(const GroundTruthParams& params, Period period) {
    auto model = std::make_shared<FittedModel>();
    model->spec = ModelSpec{ModelType::mnl, Complexity::high, period};
    model->basis = BasisDefinition::standard();
    const std::size_t p = design_size(Complexity::high);
    for (int b = 0; b < n_blocks; ++b) {
        const auto sex = static_cast<Sex>(b / 3);
        const auto prev = static_cast<Employment>(b % 3);
        MnlBlock block;
        block.beta = truth_coefficients(model->basis, sex, prev, 1);
        const auto inactive = truth_coefficients(model->basis, sex, prev, 2);
        block.beta.insert(block.beta.end(), inactive.begin(), inactive.end());
        if (period == Period::period_B) {
            block.beta[0] += params.period_b_unemployed_shift[static_cast<std::size_t>(prev)];
            block.beta[p] += params.period_b_inactive_shift[static_cast<std::size_t>(prev)];
            block.beta[6] += params.period_b_foreign_shift;
            block.beta[11] += params.period_b_high_education_shift;
        }
        block.covariance = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(2 * p), static_cast<Eigen::Index>(2 * p));
        model->mnl.push_back(std::move(block));
    }
    return model;
}

void check_distribution(double sum, const std::string& what) {
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ConfigError(what + " does not sum to 1 (sum " + std::to_string(sum) + ")");
    }
}

void check_share(double v, const std::string& what) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw ConfigError(what + " must lie in [0, 1]");
    }
}

struct Draft {
    int age = 0;
    Sex sex = Sex::female;
    Citizenship citizenship = Citizenship::national;
    bool immigrant = false;
    int ysi = 0;
    Education education = Education::low;
    CareStatus care = CareStatus::none;
    std::size_t household = 0;
    std::int64_t partner = -1;
    Partnership partnership = Partnership::single;
};

int draw_age(const std::vector<AgeBand>& bands, RandomStream& rng) {
    double u = rng.uniform();
    const AgeBand* band = &bands.back();
    for (const auto& b : bands) {
        if (u < b.share) {
            band = &b;
            break;
        }
        u -= b.share;
    }
    return band->min_age + static_cast<int>(rng.index(static_cast<std::uint64_t>(band->max_age - band->min_age + 1)));
}

/// Persons and household memberships of one district, before ids are assigned.
std::vector<Draft> draft_district(const SynthConfig& config, const DistrictSpec& spec, RandomStream& rng,
                                  std::size_t& n_households) {
    const DemographyParams care_rates;
    std::vector<Draft> people(static_cast<std::size_t>(spec.size));
    for (auto& p : people) {
        p.age = draw_age(config.age_distribution, rng);
        p.sex = rng.uniform() < config.female_share ? Sex::female : Sex::male;
        if (p.age >= child_age_limit) {
            if (rng.uniform() < spec.foreign_share) {
                p.citizenship = Citizenship::foreign;
                if (rng.uniform() < config.foreign_immigrant_share) {
                    p.immigrant = true;
                    p.ysi = static_cast<int>(rng.index(static_cast<std::uint64_t>(std::min(30, p.age - 17))));
                }
            } else if (p.age >= 26 && rng.uniform() < config.naturalized_share) {
                p.immigrant = true;
                p.ysi = 8 + static_cast<int>(rng.index(static_cast<std::uint64_t>(std::min(40, p.age - 18) - 7)));
            }
            double u = rng.uniform();
            std::size_t edu = 2;
            for (std::size_t k = 0; k < 3; ++k) {
                if (u < spec.education[k]) {
                    edu = k;
                    break;
                }
                u -= spec.education[k];
            }
            if (p.age < 20 && edu == 2) {
                edu = 1;
            }
            p.education = static_cast<Education>(edu);
        } else if (p.age >= 16) {
            p.education = rng.uniform() < 0.6 ? Education::low : Education::medium;
        }
        const double incidence = logistic(care_rates.care_intercept + care_rates.care_slope * p.age);
        if (rng.uniform() < incidence / (incidence + care_rates.care_recovery)) {
            p.care = CareStatus::receiving_care;
        }
    }

    // Couples: partnering candidates of each sex matched in age order.
    std::vector<std::pair<int, std::size_t>> women;
    std::vector<std::pair<int, std::size_t>> men;
    std::vector<bool> dependent(people.size(), false);
    for (std::size_t i = 0; i < people.size(); ++i) {
        const auto& p = people[i];
        if (p.age < child_age_limit) {
            dependent[i] = true;
            continue;
        }
        if (p.age <= 24 && rng.uniform() < config.parental_home_share) {
            dependent[i] = true;
            continue;
        }
        const bool candidate = p.sex == Sex::female ? (p.age >= 22 && p.age <= 79) : (p.age >= 24 && p.age <= 84);
        if (candidate && rng.uniform() < config.partnered_share) {
            (p.sex == Sex::female ? women : men).emplace_back(p.age, i);
        }
    }
    std::sort(women.begin(), women.end());
    std::sort(men.begin(), men.end());
    n_households = 0;
    std::vector<bool> placed(people.size(), false);
    const std::size_t couples = std::min(women.size(), men.size());
    for (std::size_t c = 0; c < couples; ++c) {
        auto& w = people[women[c].second];
        auto& m = people[men[c].second];
        const Partnership kind =
            rng.uniform() < config.married_share ? Partnership::married_cohabiting : Partnership::partnered_cohabiting;
        w.household = m.household = n_households++;
        w.partner = static_cast<std::int64_t>(men[c].second);
        m.partner = static_cast<std::int64_t>(women[c].second);
        w.partnership = m.partnership = kind;
        placed[women[c].second] = placed[men[c].second] = true;
    }
    for (std::size_t i = 0; i < people.size(); ++i) {
        if (!dependent[i] && !placed[i]) {
            people[i].household = n_households++;
            placed[i] = true;
        }
    }

    // Dependents join a household with a woman 18-45 years older.
    std::vector<std::vector<std::size_t>> women_by_age(121);
    std::vector<std::size_t> adult_households;
    for (std::size_t i = 0; i < people.size(); ++i) {
        if (placed[i] && people[i].sex == Sex::female) {
            women_by_age[static_cast<std::size_t>(std::min(people[i].age, 120))].push_back(i);
        }
    }
    for (std::size_t i = 0; i < people.size(); ++i) {
        if (!dependent[i]) {
            continue;
        }
        auto& child = people[i];
        const int lo = child.age + 18;
        const int hi = std::min(child.age + 45, 120);
        std::size_t total = 0;
        for (int a = lo; a <= hi; ++a) {
            total += women_by_age[static_cast<std::size_t>(a)].size();
        }
        if (total == 0) {
            if (n_households == 0) {
                child.household = n_households++;
            } else {
                child.household = static_cast<std::size_t>(rng.index(n_households));
            }
            continue;
        }
        auto pick = static_cast<std::size_t>(rng.index(total));
        std::size_t mother = 0;
        for (int a = lo; a <= hi; ++a) {
            const auto& bucket = women_by_age[static_cast<std::size_t>(a)];
            if (pick < bucket.size()) {
                mother = bucket[pick];
                break;
            }
            pick -= bucket.size();
        }
        const auto& m = people[mother];
        child.household = m.household;
        if (m.citizenship == Citizenship::foreign && child.age < child_age_limit) {
            child.citizenship = Citizenship::foreign;
            if (m.immigrant && m.ysi <= child.age) {
                child.immigrant = true;
                child.ysi = m.ysi;
            }
        }
    }
    return people;
}

Employment initial_state(int age, RandomStream& rng) {
    if (!is_working_age(age)) {
        return Employment::not_eligible;
    }
    const double u = rng.uniform();
    if (age < 20) {
        return u < 0.2 ? Employment::employed : Employment::inactive;
    }
    if (age >= 65) {
        return u < 0.1 ? Employment::employed : Employment::inactive;
    }
    if (u < 0.7) {
        return Employment::employed;
    }
    return u < 0.76 ? Employment::unemployed : Employment::inactive;
}

} // namespace

std::vector<AgeBand> SynthConfig::default_age_distribution() {
    return {{0, 14, 0.13},  {15, 24, 0.11}, {25, 34, 0.12}, {35, 44, 0.13}, {45, 54, 0.16},
            {55, 64, 0.13}, {65, 74, 0.11}, {75, 89, 0.10}, {90, 99, 0.01}};
}

void SynthConfig::validate() const {
    if (districts.empty()) {
        throw ConfigError("synthesis: no districts configured");
    }
    for (std::size_t i = 0; i < districts.size(); ++i) {
        const auto& d = districts[i];
        const std::string name = "district " + std::to_string(d.district_id);
        if (d.size <= 0) {
            throw ConfigError(name + ": size must be positive");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (districts[j].district_id == d.district_id) {
                throw ConfigError(name + " configured twice");
            }
        }
        check_share(d.foreign_share, name + ": foreign_share");
        for (double v : d.education) {
            check_share(v, name + ": education share");
        }
        check_distribution(d.education[0] + d.education[1] + d.education[2], name + ": education distribution");
    }
    if (age_distribution.empty()) {
        throw ConfigError("synthesis: empty age distribution");
    }
    double sum = 0.0;
    for (const auto& b : age_distribution) {
        if (b.min_age < 0 || b.max_age < b.min_age || b.max_age > 120) {
            throw ConfigError("synthesis: invalid age band " + std::to_string(b.min_age) + "-" +
                              std::to_string(b.max_age));
        }
        check_share(b.share, "age band share");
        sum += b.share;
    }
    check_distribution(sum, "age distribution");
    check_share(female_share, "female_share");
    check_share(partnered_share, "partnered_share");
    check_share(married_share, "married_share");
    check_share(parental_home_share, "parental_home_share");
    check_share(naturalized_share, "naturalized_share");
    check_share(foreign_immigrant_share, "foreign_immigrant_share");
    if (burn_in_years < 0) {
        throw ConfigError("burn_in_years must be nonnegative");
    }
}

std::shared_ptr<const EmploymentPredictor> GroundTruth::predictor(Period period) const {
    auto model = period == Period::period_A ? period_a : period_b;
    auto base = std::make_shared<ModelPredictor>(model, point_estimate(*model));
    return std::make_shared<OffsetPredictor>(std::move(base), offsets);
}

std::vector<PredictorRegime> GroundTruth::regimes() const {
    return {PredictorRegime{std::numeric_limits<int>::min(), predictor(Period::period_A)},
            PredictorRegime{switch_year, predictor(Period::period_B)}};
}

GroundTruth build_ground_truth(const SynthConfig& config) {
    GroundTruth truth;
    truth.period_a = truth_model(config.truth, Period::period_A);
    truth.period_b = truth_model(config.truth, Period::period_B);
    truth.switch_year = config.truth.switch_year;
    for (const auto& d : config.districts) {
        truth.offsets[d.district_id] = Probabilities{0.0, d.truth_offset[0], d.truth_offset[1]};
    }
    return truth;
}

Population synthesize_base(const SynthConfig& config, std::uint64_t seed) {
    config.validate();
    std::vector<District> districts;
    for (const auto& d : config.districts) {
        districts.push_back(District{d.district_id, d.name, d.size});
    }
    Population pop(config.base_year, districts);

    for (const auto& spec : config.districts) {
        RandomStream rng(mix_seed(seed, {static_cast<std::uint64_t>(spec.district_id), 1}));
        std::size_t n_households = 0;
        const std::vector<Draft> people = draft_district(config, spec, rng, n_households);
        std::vector<HouseholdId> household_ids(n_households);
        for (auto& h : household_ids) {
            h = pop.add_household(spec.district_id);
        }
        std::vector<PersonId> ids(people.size(), no_person);
        for (std::size_t i = 0; i < people.size(); ++i) {
            const auto& d = people[i];
            Individual person;
            person.sex = d.sex;
            person.age = d.age;
            person.employment = initial_state(d.age, rng);
            person.education = d.education;
            person.citizenship = d.citizenship;
            person.immigrant = d.immigrant;
            person.years_since_immigration = d.ysi;
            person.care_status = d.care;
            ids[i] = pop.add_person(person, household_ids[d.household]);
        }
        for (std::size_t i = 0; i < people.size(); ++i) {
            const auto& d = people[i];
            if (d.partner > static_cast<std::int64_t>(i)) {
                pop.link_partners(ids[i], ids[static_cast<std::size_t>(d.partner)], d.partnership);
            }
        }
    }

    const GroundTruth truth = build_ground_truth(config);
    const auto predictor = truth.predictor(Period::period_A);
    for (int round = 0; round < config.burn_in_years; ++round) {
        for (const auto& spec : config.districts) {
            RandomStream rng(mix_seed(seed, {static_cast<std::uint64_t>(spec.district_id), 2,
                                             static_cast<std::uint64_t>(round)}));
            for (Individual& person : pop.individuals()) {
                if (person.district_id != spec.district_id || !is_working_age(person.age)) {
                    continue;
                }
                const Probabilities p = predictor->predict(covariates_of(pop, person), spec.district_id);
                const double u = rng.uniform();
                person.employment = u < p[0]                ? Employment::employed
                                    : u < p[0] + p[1]       ? Employment::unemployed
                                                            : Employment::inactive;
            }
        }
    }
    pop.validate();
    return pop;
}

} // namespace microsa
