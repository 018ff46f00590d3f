#include "microsa/simkernel.hpp"

#include "microsa/error.hpp"

#include <cmath>
#include <exception>
#include <string>

namespace microsa {

namespace {

template <typename E>
bool rethrow_as(const std::exception& e, const std::string& context) {
    if (dynamic_cast<const E*>(&e) != nullptr) {
        throw E(context + e.what());
    }
    return false;
}

/// Rethrows a module failure with (year, module) context, keeping its category.
[[noreturn]] void rethrow_with_context(const std::exception& e, int year, ModuleId module, DistrictId district) {
    const std::string context = "year " + std::to_string(year) + ", module " + std::string(to_string(module)) +
                                ", district " + std::to_string(district) + ": ";
    if (const auto* c = dynamic_cast<const ConvergenceError*>(&e)) {
        throw ConvergenceError(context + c->what(), c->residual());
    }
    rethrow_as<ConfigError>(e, context) || rethrow_as<LookupError>(e, context) ||
        rethrow_as<EstimationError>(e, context) || rethrow_as<SpecificationError>(e, context) ||
        rethrow_as<NumericalError>(e, context) || rethrow_as<TargetError>(e, context) ||
        rethrow_as<StateError>(e, context) || rethrow_as<ConsistencyError>(e, context) ||
        rethrow_as<DesignError>(e, context);
    throw Error(context + e.what());
}

const EmploymentPredictor& predictor_for(const RunConfig& config, int year) {
    const EmploymentPredictor* found = nullptr;
    int from = 0;
    for (const auto& r : config.regimes) {
        if (r.from_year <= year && (found == nullptr || r.from_year >= from) && r.predictor) {
            found = r.predictor.get();
            from = r.from_year;
        }
    }
    if (found == nullptr) {
        throw StateError("no employment model in force for year " + std::to_string(year));
    }
    return *found;
}

} // namespace

std::string_view to_string(ModuleId m) {
    switch (m) {
    case ModuleId::mortality:
        return "mortality";
    case ModuleId::birth:
        return "birth";
    case ModuleId::migration:
        return "migration";
    case ModuleId::citizenship:
        return "citizenship";
    case ModuleId::education:
        return "education";
    case ModuleId::partnership:
        return "partnership";
    case ModuleId::care:
        return "care";
    case ModuleId::employment:
        return "employment";
    case ModuleId::aging:
        return "aging";
    }
    return "unknown";
}

std::string_view to_string(InternalNesting v) { return v == InternalNesting::crossed ? "crossed" : "nested"; }

InternalNesting parse_internal_nesting(std::string_view s) {
    if (s == "crossed") {
        return InternalNesting::crossed;
    }
    if (s == "nested") {
        return InternalNesting::nested;
    }
    throw ConfigError("unknown internal seed nesting '" + std::string(s) + "'");
}

std::uint64_t SeedScheme::external(int extmc, DistrictId district, int year, ModuleId module) const noexcept {
    return mix_seed(static_external, {static_cast<std::uint64_t>(extmc), static_cast<std::uint64_t>(district),
                                      static_cast<std::uint64_t>(year), static_cast<std::uint64_t>(module)});
}

std::uint64_t SeedScheme::internal(int intmc, int extmc, DistrictId district, int year) const noexcept {
    if (nesting == InternalNesting::nested) {
        return mix_seed(static_internal, {static_cast<std::uint64_t>(intmc), static_cast<std::uint64_t>(extmc),
                                          static_cast<std::uint64_t>(district), static_cast<std::uint64_t>(year)});
    }
    return mix_seed(static_internal, {static_cast<std::uint64_t>(intmc), static_cast<std::uint64_t>(district),
                                      static_cast<std::uint64_t>(year)});
}

ModelPredictor::ModelPredictor(std::shared_ptr<const FittedModel> model, CoefficientDraw draw)
    : model_(std::move(model)), draw_(std::move(draw)) {}

Probabilities ModelPredictor::predict(const CovariateInput& x, DistrictId) const {
    return predict_probs(*model_, draw_, x);
}

OffsetPredictor::OffsetPredictor(std::shared_ptr<const EmploymentPredictor> base,
                                 std::map<DistrictId, Probabilities> offsets)
    : base_(std::move(base)), offsets_(std::move(offsets)) {}

Probabilities OffsetPredictor::predict(const CovariateInput& x, DistrictId district) const {
    const Probabilities p = base_->predict(x, district);
    const auto it = offsets_.find(district);
    if (it == offsets_.end()) {
        return p;
    }
    return apply_adjustment(p, it->second);
}

Probabilities StayPredictor::predict(const CovariateInput& x, DistrictId) const {
    Probabilities p{};
    p[static_cast<std::size_t>(x.previous)] = 1.0;
    return p;
}

void apply_employment(Population& pop, DistrictId district, int year, const RunConfig& config, RunState& state,
                      RandomStream& rng) {
    const EmploymentPredictor& predictor = predictor_for(config, year);
    std::vector<Individual*> eligible;
    for (Individual& person : pop.individuals()) {
        if (person.alive && person.district_id == district && is_working_age(person.age)) {
            eligible.push_back(&person);
        }
    }
    ProbabilityMatrix probs;
    probs.categories = n_outcomes;
    probs.values.resize(eligible.size() * n_outcomes);
    for (std::size_t i = 0; i < eligible.size(); ++i) {
        const Probabilities p = predictor.predict(covariates_of(pop, *eligible[i]), district);
        std::copy(p.begin(), p.end(), probs.row(i).begin());
    }

    const bool benchmark = year <= config.benchmark_end;
    if (benchmark) {
        const AlignmentTarget* target = config.targets ? config.targets->find(district, year) : nullptr;
        if (target != nullptr) {
            const AlignmentTarget scaled = target->rescaled_to(static_cast<double>(eligible.size()));
            LogitScaleResult res = logit_scale(probs, scaled.counts, config.alignment);
            state.alignment_history[district][year] = res.alpha;
            probs = std::move(res.adjusted);
        }
    } else if (config.adjust_projection) {
        auto it = state.carry_forward.find(district);
        if (it == state.carry_forward.end()) {
            it = state.carry_forward
                     .emplace(district, derive_carry_forward(district, state.alignment_history[district]))
                     .first;
        }
        probs = apply_adjustment(probs, it->second.alpha, true);
    }

    for (std::size_t i = 0; i < eligible.size(); ++i) {
        const auto row = probs.row(i);
        const double u = rng.uniform();
        Employment next = Employment::inactive;
        if (u < row[0]) {
            next = Employment::employed;
        } else if (u < row[0] + row[1]) {
            next = Employment::unemployed;
        }
        eligible[i]->employment = next;
    }
}

void run_year(Population& pop, int year, const RunConfig& config, RunState& state) {
    if (pop.year() != year - 1) {
        throw StateError("run_year(" + std::to_string(year) + ") on a population of year " +
                         std::to_string(pop.year()));
    }
    if (!config.demography) {
        throw ConfigError("run configuration lacks demographic parameters");
    }
    const DemographyParams& demo = *config.demography;
    pop.set_year(year);
    reset_period_flags(pop);

    const auto& districts = pop.districts();
    std::vector<DistrictAccounting> acc(districts.size());
    for (std::size_t i = 0; i < districts.size(); ++i) {
        acc[i].district_id = districts[i].district_id;
        acc[i].year = year;
    }
    for (const Individual& p : pop.individuals()) {
        if (p.alive) {
            ++acc[*pop.district_index(p.district_id)].start;
        }
    }

    const bool projection = year > config.benchmark_end;
    for (ModuleId module : module_order) {
        if (module == ModuleId::aging) {
            break;
        }
        std::vector<std::vector<HouseholdId>> households;
        std::vector<std::int64_t> residents;
        if (module == ModuleId::migration) {
            households.resize(districts.size());
            residents.assign(districts.size(), 0);
            for (const Household& hh : pop.households()) {
                const std::size_t i = *pop.district_index(hh.district_id);
                households[i].push_back(hh.household_id);
                residents[i] += static_cast<std::int64_t>(hh.member_ids.size());
            }
        }
        for (std::size_t i = 0; i < districts.size(); ++i) {
            const DistrictId d = districts[i].district_id;
            const std::uint64_t seed = module == ModuleId::employment
                                           ? config.seeds.internal(config.intmc, config.extmc, d, year)
                                           : config.seeds.external(config.extmc, d, year, module);
            RandomStream rng(seed);
            try {
                switch (module) {
                case ModuleId::mortality:
                    apply_mortality(pop, d, demo, rng, acc);
                    break;
                case ModuleId::birth:
                    apply_births(pop, d, demo, rng, acc);
                    break;
                case ModuleId::migration:
                    apply_migration(pop, d, households[i], residents[i],
                                    demo.immigration_multiplier(year, projection, config.migration), demo, rng,
                                    acc);
                    break;
                case ModuleId::citizenship:
                    apply_citizenship(pop, d, demo, rng);
                    break;
                case ModuleId::education:
                    apply_education(pop, d, demo, rng);
                    break;
                case ModuleId::partnership:
                    apply_partnership(pop, d, demo, rng);
                    break;
                case ModuleId::care:
                    apply_care(pop, d, demo, rng);
                    break;
                case ModuleId::employment:
                    apply_employment(pop, d, year, config, state, rng);
                    break;
                case ModuleId::aging:
                    break;
                }
            } catch (const std::exception& e) {
                rethrow_with_context(e, year, module, d);
            }
            if (config.record_draw_log) {
                state.draw_log.push_back(DrawLogEntry{module, d, year, seed, rng.draws(), rng.digest()});
            }
        }
        if (module == ModuleId::mortality || module == ModuleId::migration || module == ModuleId::partnership) {
            pop.compact();
        }
        if (config.validate_modules) {
            try {
                pop.validate();
            } catch (const std::exception& e) {
                rethrow_with_context(e, year, module, -1);
            }
        }
    }

    const auto counts = tabulate_districts(pop);
    for (std::size_t i = 0; i < districts.size(); ++i) {
        acc[i].end = counts[i].persons;
        state.records.push_back(RunRecord{districts[i].district_id, year, counts[i]});
    }
    state.accounting.insert(state.accounting.end(), acc.begin(), acc.end());
    if (config.observer) {
        config.observer(pop);
    }
    apply_aging(pop);
    if (config.validate_modules) {
        pop.validate();
    }
}

RunState run_simulation(Population base, const RunConfig& config) {
    if (config.benchmark_end < config.first_year - 1 || config.projection_end < config.benchmark_end) {
        throw ConfigError("run years must satisfy first_year - 1 <= benchmark_end <= projection_end");
    }
    if (base.year() != config.first_year - 1) {
        throw StateError("base population year " + std::to_string(base.year()) + " does not precede first year " +
                         std::to_string(config.first_year));
    }
    RunState state;
    for (int year = config.first_year; year <= config.projection_end; ++year) {
        run_year(base, year, config, state);
    }
    return state;
}

} // namespace microsa
