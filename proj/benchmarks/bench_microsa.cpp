#include "microsa/alignment.hpp"
#include "microsa/config.hpp"
#include "microsa/sensitivity.hpp"
#include "microsa/simkernel.hpp"
#include "microsa/synthesis.hpp"
#include "microsa/transmodel.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace microsa;

namespace {

// k factors with three levels each, Gaussian values.
OutputTable table(int k) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(k));
    std::normal_distribution<double> z;
    OutputTable t;
    std::size_t cells = 1;
    for (int f = 0; f < k; ++f) {
        t.factors.push_back({"f" + std::to_string(f), {"a", "b", "c"}});
        cells *= 3;
    }
    t.values.resize(cells);
    for (auto& v : t.values) {
        v = z(rng);
    }
    return t;
}

void BM_VarianceComponents(benchmark::State& state) {
    const OutputTable t = table(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(variance_components(t));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * t.values.size()));
}
BENCHMARK(BM_VarianceComponents)->DenseRange(2, 8, 2);

void BM_LogitScale(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(9);
    std::gamma_distribution<double> g(1.0, 1.0);
    ProbabilityMatrix p{3, std::vector<double>(3 * n)};
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t c = 0; c < 3; ++c) {
            s += p.values[3 * i + c] = g(rng) + 1e-3;
        }
        for (std::size_t c = 0; c < 3; ++c) {
            p.values[3 * i + c] /= s;
        }
    }
    const double nd = static_cast<double>(n);
    const std::vector<double> targets{0.6 * nd, 0.1 * nd, 0.3 * nd};
    for (auto _ : state) {
        benchmark::DoNotOptimize(logit_scale(p, targets));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_LogitScale)->RangeMultiplier(10)->Range(1000, 100000)->Unit(benchmark::kMillisecond);

void BM_PredictProbs(benchmark::State& state) {
    const auto tier = static_cast<Complexity>(state.range(0));
    const GroundTruth truth = build_ground_truth(SynthConfig{});
    FittedModel model = *truth.period_a;
    const std::size_t ph = design_size(Complexity::high);
    const std::size_t p = design_size(tier);
    for (auto& b : model.mnl) {
        std::vector<double> beta(2 * p);
        for (std::size_t j = 0; j < p; ++j) {
            beta[j] = b.beta[j];
            beta[p + j] = b.beta[ph + j];
        }
        b.beta = beta;
    }
    model.spec.complexity = tier;
    const CoefficientDraw draw = point_estimate(model);
    CovariateInput x;
    x.sex = Sex::female;
    x.previous = Employment::employed;
    x.age = 37;
    x.birth_event = false;
    x.citizenship = Citizenship::foreign;
    x.immigrant = true;
    x.years_since_immigration = 6;
    x.education = Education::medium;
    x.care_status = CareStatus::none;
    x.partnership = Partnership::married_cohabiting;
    x.n_children = 2;
    x.age_youngest_child = 4;
    for (auto _ : state) {
        benchmark::DoNotOptimize(predict_probs(model, draw, x));
    }
}
BENCHMARK(BM_PredictProbs)->DenseRange(0, 2);

void BM_RunYear(benchmark::State& state) {
    SynthConfig synth;
    synth.districts = {{1, "a", state.range(0), 0.12, {0.25, 0.5, 0.25}, {0.1, 0.0}}};
    const Population base = synthesize_base(synth, 1);
    const GroundTruth truth = build_ground_truth(synth);
    RunConfig config;
    config.first_year = synth.base_year + 1;
    config.benchmark_end = config.first_year;
    config.projection_end = config.first_year;
    config.regimes = truth.regimes();
    config.demography = std::make_shared<const DemographyParams>(ProjectConfig::default_demography());
    config.seeds = SeedScheme{6, 7, InternalNesting::crossed};
    for (auto _ : state) {
        state.PauseTiming();
        Population pop = base;
        RunState run;
        state.ResumeTiming();
        run_year(pop, config.first_year, config, run);
        benchmark::DoNotOptimize(run.records.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RunYear)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

} // namespace

// the packaged benchmark_main archive carries LTO bytecode from another compiler
BENCHMARK_MAIN();
