#include "microsa/config.hpp"

#include "microsa/error.hpp"
#include "microsa/textio.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

namespace microsa {

namespace {

constexpr const char* survey_header = "# microsa-survey v1";

bool in_window(int year, const std::pair<int, int>& w) { return year >= w.first && year <= w.second; }

template <typename T>
std::string opt_string(const std::optional<T>& v) {
    if (!v) {
        return "NA";
    }
    if constexpr (std::is_same_v<T, bool>) {
        return *v ? "1" : "0";
    } else if constexpr (std::is_same_v<T, int>) {
        return std::to_string(*v);
    } else {
        return std::string(to_string(*v));
    }
}

} // namespace

RealityOutput simulate_reality(const Population& base, const ProjectConfig& config) {
    const GroundTruth truth = build_ground_truth(config.synth);
    auto demography = std::make_shared<const DemographyParams>(config.demography);

    RunConfig run;
    run.first_year = config.years.base + 1;
    run.benchmark_end = config.years.benchmark_end;
    run.projection_end = config.years.benchmark_end;
    run.regimes = truth.regimes();
    run.demography = demography;
    run.seeds = SeedScheme{config.seeds.reality_external, config.seeds.reality_internal, InternalNesting::crossed};

    std::set<int> snapshot_years;
    for (const auto& w : {config.survey.window_a, config.survey.window_b}) {
        for (int y = w.first - 1; y <= w.second; ++y) {
            snapshot_years.insert(y);
        }
    }
    RealityOutput out;
    std::map<int, Population> snapshots;
    run.observer = [&](const Population& pop) {
        std::map<DistrictId, AlignmentTarget> totals;
        for (const auto& d : pop.districts()) {
            totals[d.district_id] = AlignmentTarget{d.district_id, pop.year(), {}};
        }
        for (const Individual& p : pop.individuals()) {
            if (p.alive && p.employment != Employment::not_eligible) {
                totals[p.district_id].counts[static_cast<std::size_t>(p.employment)] += 1.0;
            }
        }
        for (const auto& [id, t] : totals) {
            out.targets.set(t);
        }
        if (snapshot_years.count(pop.year()) != 0) {
            snapshots.emplace(pop.year(), pop);
        }
    };
    run_simulation(base, run);

    for (const auto& [year, pop] : snapshots) {
        const auto prev = snapshots.find(year - 1);
        if (prev == snapshots.end()) {
            continue;
        }
        const auto seed = mix_seed(config.seeds.survey, {static_cast<std::uint64_t>(year)});
        Survey s = build_survey(prev->second, pop, config.survey.fraction, seed);
        Survey& target = in_window(year, config.survey.window_a) ? out.survey_a : out.survey_b;
        if (in_window(year, config.survey.window_a) || in_window(year, config.survey.window_b)) {
            target.insert(target.end(), s.begin(), s.end());
        }
    }
    return out;
}

std::map<ModelKey, FittedModel> estimate_models(const Survey& survey_a, const Survey& survey_b,
                                                const FitOptions& options) {
    std::map<ModelKey, FittedModel> models;
    for (Period period : {Period::period_A, Period::period_B}) {
        const Survey& survey = period == Period::period_A ? survey_a : survey_b;
        for (ModelType type : {ModelType::mnl, ModelType::rate_table}) {
            for (Complexity c : {Complexity::low, Complexity::medium, Complexity::high}) {
                const ModelSpec spec{type, c, period};
                models.emplace(ModelKey{type, c, period},
                               type == ModelType::mnl ? fit_mnl(survey, spec, options) : fit_rate_table(survey, spec));
            }
        }
    }
    return models;
}

Experiment make_experiment(const ProjectConfig& config, Population base,
                           const std::map<ModelKey, FittedModel>& models, BenchmarkTargets targets) {
    Experiment e;
    e.base = std::make_shared<const Population>(std::move(base));
    for (const auto& [key, model] : models) {
        e.models[key] = std::make_shared<const FittedModel>(model);
    }
    e.coefficient_seed = config.seeds.coefficients;
    e.targets = std::make_shared<const BenchmarkTargets>(std::move(targets));
    e.demography = std::make_shared<const DemographyParams>(config.demography);
    e.seeds = SeedScheme{config.seeds.static_external, config.seeds.static_internal, config.seeds.internal_nesting};
    e.first_year = config.years.base + 1;
    e.benchmark_end = config.years.benchmark_end;
    e.projection_end = config.years.projection_end;
    return e;
}

WorkspacePaths::WorkspacePaths(const std::string& workspace) {
    const std::filesystem::path root(workspace);
    population = (root / "base_population.txt").string();
    benchmark = (root / "benchmark.csv").string();
    survey_a = (root / "survey_period_A.tsv").string();
    survey_b = (root / "survey_period_B.tsv").string();
    models_dir = (root / "models").string();
}

std::string WorkspacePaths::model(const ModelKey& key) const {
    return (std::filesystem::path(models_dir) / (ModelSpec{key.type, key.complexity, key.period}.name() + ".model"))
        .string();
}

std::vector<ModelKey> model_keys(const GridSpec& grid) {
    std::vector<ModelKey> keys;
    for (ModelType t : grid.types) {
        for (Complexity c : grid.complexities) {
            for (Period p : grid.periods) {
                keys.push_back(ModelKey{t, c, p});
            }
        }
    }
    std::sort(keys.begin(), keys.end());
    return keys;
}

Experiment load_experiment(const ProjectConfig& config) {
    const WorkspacePaths paths(config.workspace);
    Population base = load_population(paths.population);
    std::ifstream bench(paths.benchmark);
    if (!bench) {
        throw ConfigError("cannot open benchmark file " + paths.benchmark);
    }
    BenchmarkTargets targets = read_benchmark_csv(bench);
    std::map<ModelKey, FittedModel> models;
    for (const ModelKey& key : model_keys(config.grid)) {
        models.emplace(key, load_model(paths.model(key)));
    }
    return make_experiment(config, std::move(base), models, std::move(targets));
}

StoreManifest store_manifest(const ProjectConfig& config) {
    StoreManifest m;
    m.config_hash = config.hash();
    m.code_version = std::string(version());
    m.grid = config.grid;
    return m;
}

void write_survey(std::ostream& out, const Survey& survey) {
    out << survey_header << '\n';
    out << "person_id\thousehold_id\tyear\tsex\tprevious\tage\tbirth_event\tcitizenship\timmigrant\t"
           "years_since_immigration\teducation\tcare_status\tpartnership\tn_children\tage_youngest_child\toutcome\n";
    for (const auto& r : survey) {
        const auto& x = r.covariates;
        out << r.person_id << '\t' << r.household_id << '\t' << r.year << '\t' << to_string(x.sex) << '\t'
            << to_string(x.previous) << '\t' << x.age << '\t' << opt_string(x.birth_event) << '\t'
            << opt_string(x.citizenship) << '\t' << opt_string(x.immigrant) << '\t'
            << opt_string(x.years_since_immigration) << '\t' << opt_string(x.education) << '\t'
            << opt_string(x.care_status) << '\t' << opt_string(x.partnership) << '\t' << opt_string(x.n_children)
            << '\t' << opt_string(x.age_youngest_child) << '\t' << to_string(r.outcome) << '\n';
    }
}

Survey read_survey(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != survey_header) {
        throw ConfigError("survey file: missing header '" + std::string(survey_header) + "'");
    }
    std::getline(in, line);
    Survey out;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto f = textio::split(line, '\t');
        if (f.size() != 16) {
            throw ConfigError("survey file: expected 16 fields per record");
        }
        SurveyRecord r;
        r.person_id = textio::parse_int(f[0]);
        r.household_id = textio::parse_int(f[1]);
        r.year = static_cast<int>(textio::parse_int(f[2]));
        auto& x = r.covariates;
        x.sex = parse_sex(f[3]);
        x.previous = parse_employment(f[4]);
        x.age = static_cast<int>(textio::parse_int(f[5]));
        auto flag = [](const std::string& s) { return std::optional<bool>(s == "1"); };
        if (f[6] != "NA") x.birth_event = flag(f[6]);
        if (f[7] != "NA") x.citizenship = parse_citizenship(f[7]);
        if (f[8] != "NA") x.immigrant = flag(f[8]);
        if (f[9] != "NA") x.years_since_immigration = static_cast<int>(textio::parse_int(f[9]));
        if (f[10] != "NA") x.education = parse_education(f[10]);
        if (f[11] != "NA") x.care_status = parse_care_status(f[11]);
        if (f[12] != "NA") x.partnership = parse_partnership(f[12]);
        if (f[13] != "NA") x.n_children = static_cast<int>(textio::parse_int(f[13]));
        if (f[14] != "NA") x.age_youngest_child = static_cast<int>(textio::parse_int(f[14]));
        r.outcome = parse_employment(f[15]);
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace microsa
