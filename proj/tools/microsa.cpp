// microsa: synthesis, estimation, grid execution and sensitivity analysis
// driven by one JSON project file.

#include "microsa/config.hpp"
#include "microsa/error.hpp"
#include "microsa/sensitivity.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace microsa;

namespace {

enum Exit : int {
    ok = 0,
    internal = 1,
    config_error = 2,
    refused = 3,
    estimation = 4,
    design = 5,
    lookup = 6,
    failed_points = 7,
    interrupted = 130,
};

/// Thrown when an output would be overwritten without --force.
struct Refusal : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::atomic<bool> stop_requested{false};

extern "C" void on_signal(int) { stop_requested.store(true); }

// Progress and diagnostics go to stderr as one JSON object per line.
void emit(const nlohmann::json& event) { std::cerr << event.dump() << '\n' << std::flush; }

void refuse_existing(const std::vector<std::string>& paths, bool force) {
    if (force) {
        return;
    }
    for (const auto& p : paths) {
        if (fs::exists(p)) {
            throw Refusal("refusing to overwrite " + p + " (use --force)");
        }
    }
}

template <typename Write>
void write_file(const std::string& path, Write&& write) {
    if (const auto parent = fs::path(path).parent_path(); !parent.empty()) {
        fs::create_directories(parent);
    }
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) {
            throw ConfigError("cannot write " + path);
        }
        write(out);
        out.flush();
        if (!out) {
            throw ConfigError("write failed for " + path);
        }
    }
    fs::rename(tmp, path);
}

Survey read_survey_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open survey " + path + " (run 'microsa synth' first)");
    }
    return read_survey(in);
}

int cmd_synth(const ProjectConfig& config, bool force) {
    const WorkspacePaths paths(config.workspace);
    refuse_existing({paths.population, paths.benchmark, paths.survey_a, paths.survey_b}, force);
    emit({{"event", "synth"}, {"stage", "base"}, {"districts", config.synth.districts.size()}});
    const Population base = synthesize_base(config.synth, config.seeds.synthesis);
    emit({{"event", "synth"}, {"stage", "reality"}, {"persons", base.size()}});
    const RealityOutput reality = simulate_reality(base, config);

    write_file(paths.population, [&](std::ostream& out) { write_population(out, base); });
    write_file(paths.benchmark, [&](std::ostream& out) { write_benchmark_csv(out, reality.targets); });
    write_file(paths.survey_a, [&](std::ostream& out) { write_survey(out, reality.survey_a); });
    write_file(paths.survey_b, [&](std::ostream& out) { write_survey(out, reality.survey_b); });
    emit({{"event", "synth"},
          {"stage", "done"},
          {"survey_a", reality.survey_a.size()},
          {"survey_b", reality.survey_b.size()}});
    return ok;
}

int cmd_estimate(const ProjectConfig& config, bool force) {
    const WorkspacePaths paths(config.workspace);
    std::vector<std::string> outputs;
    for (const ModelKey& key : model_keys(GridSpec{})) {
        outputs.push_back(paths.model(key));
    }
    refuse_existing(outputs, force);
    const Survey a = read_survey_file(paths.survey_a);
    const Survey b = read_survey_file(paths.survey_b);
    const auto models = estimate_models(a, b);
    for (const auto& [key, model] : models) {
        write_file(paths.model(key), [&](std::ostream& out) { write_model(out, model); });
        emit({{"event", "estimate"}, {"model", model.spec.name()}, {"coefficients", model.n_coefficients()}});
    }
    return ok;
}

int cmd_run(const ProjectConfig& config, int jobs, bool resume, bool force) {
    if (force && !resume && fs::exists(config.store)) {
        fs::remove_all(config.store);
    }
    const Experiment experiment = load_experiment(config);
    const auto points = enumerate_grid(config.grid);
    std::vector<DistrictId> districts;
    for (const auto& d : experiment.base->districts()) {
        districts.push_back(d.district_id);
    }
    check_seed_collisions(config.grid, experiment.seeds, districts, experiment.first_year, experiment.projection_end);

    ResultStore store = [&] {
        try {
            return ResultStore::create(config.store, store_manifest(config), resume);
        } catch (const StateError& e) {
            // Without --resume an existing store is never touched; with it, a
            // manifest mismatch means the configuration changed.
            if (!resume) {
                throw Refusal(e.what());
            }
            throw ConfigError(e.what());
        }
    }();
    emit({{"event", "run"}, {"stage", "start"}, {"points", points.size()}, {"jobs", jobs}, {"store", store.dir()}});
    const auto summary = execute_grid(
        points, experiment, jobs, store,
        [](const ProgressEvent& e) {
            nlohmann::json j{{"event", "point"},  {"id", e.point_id},        {"status", e.status},
                             {"finished", e.finished}, {"total", e.total}};
            if (!e.message.empty()) {
                j["message"] = e.message;
            }
            emit(j);
        },
        &stop_requested);
    emit({{"event", "run"},
          {"stage", "done"},
          {"completed", summary.completed},
          {"skipped", summary.skipped},
          {"failed", summary.failed}});
    if (stop_requested.load()) {
        return interrupted;
    }
    return summary.failed > 0 ? failed_points : ok;
}

std::vector<Exclusion> parse_exclusions(const std::vector<std::string>& items) {
    std::vector<Exclusion> out;
    for (const auto& e : items) {
        out.push_back(parse_exclusion(e));
    }
    return out;
}

int cmd_analyze(const std::string& store_dir, const std::string& indicator, const std::string& region,
                const std::vector<std::string>& exclude, const std::string& out_path, bool force) {
    refuse_existing({out_path}, force);
    const StoreData data = StoreData::load(ResultStore::open(store_dir));
    const auto series = report_series(data, indicator, region, parse_exclusions(exclude));
    write_file(out_path, [&](std::ostream& out) { write_report_csv(out, series); });
    emit({{"event", "analyze"}, {"indicator", indicator}, {"region", region}, {"years", series.size()},
          {"out", out_path}});
    return ok;
}

int cmd_report(const std::string& store_dir, std::vector<int> years, const std::string& summary_path,
               const std::string& plot_path, const std::string& indicator, const std::string& region,
               const std::vector<std::string>& exclude, bool force) {
    if (summary_path.empty() && plot_path.empty()) {
        throw ConfigError("report: nothing to do (give --summary and/or --plot)");
    }
    std::vector<std::string> outputs;
    for (const auto& p : {summary_path, plot_path}) {
        if (!p.empty()) {
            outputs.push_back(p);
        }
    }
    refuse_existing(outputs, force);
    const StoreData data = StoreData::load(ResultStore::open(store_dir));
    if (years.empty()) {
        if (data.years().empty()) {
            throw DesignError("store " + store_dir + " holds no completed points");
        }
        years.push_back(data.years().back());
    }
    if (!summary_path.empty()) {
        const auto rows = summarize(data, years);
        write_file(summary_path, [&](std::ostream& out) { write_summary_csv(out, rows); });
        emit({{"event", "report"}, {"summary", summary_path}, {"rows", rows.size()}});
    }
    if (!plot_path.empty()) {
        const auto series = report_series(data, indicator, region, parse_exclusions(exclude));
        write_file(plot_path, [&](std::ostream& out) { write_area_svg(out, series, indicator + " / " + region); });
        emit({{"event", "report"}, {"plot", plot_path}});
    }
    return ok;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const Refusal*>(&e) != nullptr) {
        return refused;
    }
    if (dynamic_cast<const ConfigError*>(&e) != nullptr) {
        return config_error;
    }
    if (dynamic_cast<const EstimationError*>(&e) != nullptr || dynamic_cast<const ConvergenceError*>(&e) != nullptr) {
        return estimation;
    }
    if (dynamic_cast<const DesignError*>(&e) != nullptr) {
        return design;
    }
    if (dynamic_cast<const LookupError*>(&e) != nullptr) {
        return lookup;
    }
    return internal;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Variance-based sensitivity analysis of a dynamic employment microsimulation"};
    app.set_version_flag("--version", std::string(version()));
    app.require_subcommand(1);
    app.footer("Exit codes: 0 ok, 1 internal error, 2 configuration error, 3 refused overwrite,\n"
               "4 estimation or convergence error, 5 design error, 6 lookup error, 7 failed grid points, 130 interrupted.");

    std::string config_path;
    bool force = false;
    int jobs = 0;
    bool resume = false;
    std::string store_dir;
    std::string indicator;
    std::string region;
    std::vector<std::string> exclude;
    std::string out_path;
    std::vector<int> years;
    std::string summary_path;
    std::string plot_path;

    auto* synth = app.add_subcommand("synth", "Synthesize the base population, benchmark totals and surveys");
    auto* estimate = app.add_subcommand("estimate", "Fit the twelve transition models from the surveys");
    auto* run = app.add_subcommand("run", "Execute the experiment grid into the result store");
    auto* analyze = app.add_subcommand("analyze", "Variance decomposition per year for one indicator and region");
    auto* report = app.add_subcommand("report", "Summary table of first-order indices and area plot");

    for (auto* cmd : {synth, estimate, run}) {
        cmd->add_option("-c,--config", config_path, "Project configuration (JSON)")->required();
    }
    for (auto* cmd : {analyze, report}) {
        cmd->add_option("-c,--config", config_path, "Project configuration (store and analysis defaults)");
        cmd->add_option("--store", store_dir, "Result store directory");
        cmd->add_option("--indicator", indicator, "Indicator name");
        cmd->add_option("--region", region, "District id or 'aggregate'");
        cmd->add_option("--exclude", exclude, "Exclude a factor level, e.g. compl=low (repeatable)");
    }
    for (auto* cmd : {synth, estimate, run, analyze, report}) {
        cmd->add_flag("--force", force, "Overwrite existing outputs");
    }
    run->add_option("-j,--jobs", jobs, "Worker threads (default from config)")->check(CLI::PositiveNumber);
    run->add_flag("--resume", resume, "Continue an interrupted store, skipping completed points");
    analyze->add_option("-o,--out", out_path, "Output CSV")->required();
    report->add_option("--year", years, "Years to summarize (default: final year)");
    report->add_option("--summary", summary_path, "Summary CSV (max/median S_i per factor)");
    report->add_option("--plot", plot_path, "Stacked-area SVG of S_i over time");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);

    try {
        std::optional<ProjectConfig> config;
        if (!config_path.empty()) {
            config = ProjectConfig::load(config_path);
        }
        if (synth->parsed()) {
            return cmd_synth(*config, force);
        }
        if (estimate->parsed()) {
            return cmd_estimate(*config, force);
        }
        if (run->parsed()) {
            return cmd_run(*config, jobs > 0 ? jobs : config->jobs, resume, force);
        }
        if (store_dir.empty()) {
            if (!config) {
                throw ConfigError("give --store or --config");
            }
            store_dir = config->store;
        }
        if (indicator.empty()) {
            indicator = config ? config->analysis_indicator : "unemployment_rate";
        }
        if (region.empty()) {
            region = config ? config->analysis_region : std::string(aggregate_region);
        }
        if (analyze->parsed()) {
            return cmd_analyze(store_dir, indicator, region, exclude, out_path, force);
        }
        return cmd_report(store_dir, years, summary_path, plot_path, indicator, region, exclude, force);
    } catch (const std::exception& e) {
        const int code = exit_code_for(e);
        emit({{"event", "error"}, {"code", code}, {"message", e.what()}});
        return code;
    }
}
