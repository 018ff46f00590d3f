#include "microsa/config.hpp"
#include "microsa/error.hpp"
#include "microsa/simkernel.hpp"
#include "microsa/synthesis.hpp"

#include <gtest/gtest.h>

#include <memory>

using namespace microsa;

namespace {

class UniformPredictor final : public EmploymentPredictor {
public:
    Probabilities predict(const CovariateInput&, DistrictId) const override {
        return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    }
};

SynthConfig two_districts() {
    SynthConfig c;
    c.districts = {{1, "a", 400, 0.1, {0.3, 0.5, 0.2}, {0.2, 0.0}},
                   {2, "b", 600, 0.15, {0.2, 0.5, 0.3}, {-0.1, 0.1}}};
    return c;
}

struct Fixture {
    SynthConfig synth = two_districts();
    Population base = synthesize_base(synth, 21);
    GroundTruth truth = build_ground_truth(synth);
    RunConfig config;

    Fixture() {
        config.first_year = synth.base_year + 1;
        config.benchmark_end = synth.base_year + 4;
        config.projection_end = synth.base_year + 8;
        config.regimes = truth.regimes();
        config.demography = std::make_shared<const DemographyParams>(ProjectConfig::default_demography());
        config.seeds = SeedScheme{101, 202, InternalNesting::crossed};
        config.validate_modules = true;
    }
};

} // namespace

TEST(RunYear, EmptyPopulationStaysEmpty) {
    Fixture f;
    Population pop(f.synth.base_year, {District{1, "a", 0}});
    RunState state;
    run_year(pop, f.config.first_year, f.config, state);
    EXPECT_TRUE(pop.empty());
    EXPECT_EQ(pop.year(), f.config.first_year);
}

TEST(RunYear, DegenerateRatesOnlyAge) {
    Fixture f;
    SynthConfig c = f.synth;
    c.age_distribution = {{20, 60, 1.0}};
    Population pop = synthesize_base(c, 3);
    const Population before = pop;
    RunConfig cfg = f.config;
    cfg.demography = std::make_shared<const DemographyParams>(DemographyParams::none());
    cfg.regimes = {{0, std::make_shared<StayPredictor>()}};
    RunState state;
    run_year(pop, cfg.first_year, cfg, state);
    ASSERT_EQ(pop.size(), before.size());
    for (std::size_t i = 0; i < pop.size(); ++i) {
        Individual expected = before.individuals()[i];
        expected.age += 1;
        if (expected.immigrant) {
            expected.years_since_immigration += 1;
        }
        expected.birth_event_this_period = false;
        EXPECT_EQ(pop.individuals()[i], expected);
    }
}

TEST(RunYear, EmploymentMatchesDrawReplay) {
    Fixture f;
    Population pop = f.base;
    Population replay = f.base;
    RunConfig cfg = f.config;
    cfg.demography = std::make_shared<const DemographyParams>(DemographyParams::none());
    cfg.targets = nullptr;
    const int year = cfg.first_year;
    RunState state;
    run_year(pop, year, cfg, state);

    replay.set_year(year);
    reset_period_flags(replay);
    const auto predictor = f.truth.predictor(Period::period_A);
    for (const auto& d : replay.districts()) {
        RandomStream rng(cfg.seeds.internal(cfg.intmc, cfg.extmc, d.district_id, year));
        std::vector<std::pair<PersonId, Probabilities>> rows;
        for (const Individual& p : replay.individuals()) {
            if (p.alive && p.district_id == d.district_id && is_working_age(p.age)) {
                rows.emplace_back(p.person_id, predictor->predict(covariates_of(replay, p), d.district_id));
            }
        }
        for (const auto& [id, pr] : rows) {
            const double u = rng.uniform();
            replay.find_person(id)->employment =
                u < pr[0] ? Employment::employed : u < pr[0] + pr[1] ? Employment::unemployed : Employment::inactive;
        }
    }
    apply_aging(replay);
    ASSERT_EQ(pop.size(), replay.size());
    std::array<int, 4> a{}, b{};
    for (std::size_t i = 0; i < pop.size(); ++i) {
        EXPECT_EQ(pop.individuals()[i].employment, replay.individuals()[i].employment);
        ++a[static_cast<std::size_t>(pop.individuals()[i].employment)];
        ++b[static_cast<std::size_t>(replay.individuals()[i].employment)];
    }
    EXPECT_EQ(a, b);
}

TEST(RunYear, WrongYearIsStateError) {
    Fixture f;
    Population pop = f.base;
    RunState state;
    EXPECT_THROW(run_year(pop, f.config.first_year + 1, f.config, state), StateError);
}

TEST(RunSimulation, DeterministicInConfig) {
    Fixture f;
    const RunState a = run_simulation(f.base, f.config);
    const RunState b = run_simulation(f.base, f.config);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        EXPECT_EQ(a.records[i].counts, b.records[i].counts);
    }
    EXPECT_EQ(a.accounting, b.accounting);
}

TEST(RunSimulation, ProjectionHorizonZero) {
    Fixture f;
    RunConfig cfg = f.config;
    cfg.projection_end = cfg.benchmark_end;
    const RunState s = run_simulation(f.base, cfg);
    for (const auto& r : s.records) {
        EXPECT_LE(r.year, cfg.benchmark_end);
    }
    EXPECT_EQ(s.records.size(), 2u * static_cast<std::size_t>(cfg.benchmark_end - cfg.first_year + 1));
}

TEST(RunSimulation, AccountingIdentityAndEligibility) {
    Fixture f;
    RunConfig cfg = f.config;
    int violations = 0;
    cfg.observer = [&](const Population& pop) {
        for (const Individual& p : pop.individuals()) {
            if (p.alive && (p.employment == Employment::not_eligible) == is_working_age(p.age)) {
                ++violations;
            }
        }
    };
    const RunState s = run_simulation(f.base, cfg);
    EXPECT_EQ(violations, 0);
    ASSERT_FALSE(s.accounting.empty());
    for (const auto& a : s.accounting) {
        EXPECT_EQ(a.end, a.start + a.births + a.immigrants + a.moved_in - a.deaths - a.emigrants - a.moved_out)
            << "district " << a.district_id << " year " << a.year;
    }
}

TEST(RunSimulation, IntmcChangesOnlyEmploymentDraws) {
    Fixture f;
    RunConfig cfg = f.config;
    cfg.record_draw_log = true;
    RunConfig other = cfg;
    other.intmc = 2;
    const RunState a = run_simulation(f.base, cfg);
    const RunState b = run_simulation(f.base, other);
    ASSERT_EQ(a.draw_log.size(), b.draw_log.size());
    for (std::size_t i = 0; i < a.draw_log.size(); ++i) {
        const auto& x = a.draw_log[i];
        const auto& y = b.draw_log[i];
        ASSERT_EQ(x.module, y.module);
        if (x.module == ModuleId::employment) {
            EXPECT_NE(x.seed, y.seed);
        } else {
            EXPECT_EQ(x.seed, y.seed);
            if (x.year == cfg.first_year) {
                EXPECT_EQ(x, y);
            }
        }
    }
}

TEST(RunSimulation, ExtmcChangesOnlyNonEmploymentDraws) {
    Fixture f;
    RunConfig cfg = f.config;
    cfg.record_draw_log = true;
    RunConfig other = cfg;
    other.extmc = 2;
    const RunState a = run_simulation(f.base, cfg);
    const RunState b = run_simulation(f.base, other);
    ASSERT_EQ(a.draw_log.size(), b.draw_log.size());
    for (std::size_t i = 0; i < a.draw_log.size(); ++i) {
        const auto& x = a.draw_log[i];
        const auto& y = b.draw_log[i];
        if (x.module == ModuleId::employment) {
            EXPECT_EQ(x.seed, y.seed);
        } else {
            EXPECT_NE(x.seed, y.seed);
        }
    }
}

TEST(RunSimulation, ZeroOffsetAdjustmentEqualsNoAdjustment) {
    Fixture f;
    RunConfig cfg = f.config;
    cfg.regimes = {{0, std::make_shared<UniformPredictor>()}};
    auto targets = std::make_shared<BenchmarkTargets>();
    for (int y = cfg.first_year; y <= cfg.benchmark_end; ++y) {
        for (DistrictId d : {1, 2}) {
            targets->set(AlignmentTarget{d, y, {1.0, 1.0, 1.0}});
        }
    }
    cfg.targets = targets;
    RunConfig no = cfg;
    cfg.adjust_projection = true;
    no.adjust_projection = false;
    const RunState a = run_simulation(f.base, cfg);
    const RunState b = run_simulation(f.base, no);
    for (const auto& [d, hist] : a.alignment_history) {
        for (const auto& [y, alpha] : hist) {
            for (double v : alpha) {
                EXPECT_EQ(v, 0.0);
            }
        }
    }
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        EXPECT_EQ(a.records[i].counts, b.records[i].counts);
    }
}

TEST(RunSimulation, AlignmentHitsBenchmarkTotals) {
    Fixture f;
    RunConfig cfg = f.config;
    auto targets = std::make_shared<BenchmarkTargets>();
    for (int y = cfg.first_year; y <= cfg.benchmark_end; ++y) {
        for (DistrictId d : {1, 2}) {
            targets->set(AlignmentTarget{d, y, {0.6, 0.05, 0.35}});
        }
    }
    cfg.targets = targets;
    cfg.adjust_projection = true;
    const RunState s = run_simulation(f.base, cfg);
    for (DistrictId d : {1, 2}) {
        ASSERT_EQ(s.alignment_history.at(d).size(), static_cast<std::size_t>(cfg.benchmark_end - cfg.first_year + 1));
        EXPECT_EQ(s.carry_forward.at(d).alpha, s.alignment_history.at(d).rbegin()->second);
        EXPECT_EQ(s.carry_forward.at(d).alpha[0], 0.0);
    }
}

TEST(SeedScheme, NestedInternalDependsOnExtmc) {
    SeedScheme crossed{1, 2, InternalNesting::crossed};
    SeedScheme nested{1, 2, InternalNesting::nested};
    EXPECT_EQ(crossed.internal(1, 1, 3, 2015), crossed.internal(1, 2, 3, 2015));
    EXPECT_NE(nested.internal(1, 1, 3, 2015), nested.internal(1, 2, 3, 2015));
    EXPECT_NE(crossed.external(1, 3, 2015, ModuleId::birth), crossed.external(1, 3, 2015, ModuleId::mortality));
}
