// Small end-to-end experiment shared by the experiment, sensitivity and CLI
// tests. MNL models are the ground truth truncated to each tier, so no fit
// can fail on the tiny survey; rate tables are fitted on the reality survey.
#pragma once

#include "microsa/config.hpp"
#include "microsa/experiment.hpp"
#include "microsa/synthesis.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

namespace fixture {

using namespace microsa;

inline ProjectConfig small_config() {
    ProjectConfig c;
    c.synth.districts = {{1, "small", 300, 0.1, {0.3, 0.5, 0.2}, {0.3, 0.1}},
                         {2, "large", 900, 0.15, {0.2, 0.5, 0.3}, {-0.2, 0.0}}};
    c.synth.truth.switch_year = 2014;
    c.years = YearConfig{2011, 2014, 2016};
    c.survey.window_a = {2013, 2013};
    c.survey.window_b = {2014, 2014};
    c.grid.coeffs = {0, 1};
    c.grid.extmcs = {1, 2};
    c.grid.intmcs = {1, 2};
    return c;
}

inline FittedModel truncated(const FittedModel& high, Complexity tier, Period period) {
    FittedModel m;
    m.spec = {ModelType::mnl, tier, period};
    const std::size_t ph = design_size(Complexity::high);
    const std::size_t p = design_size(tier);
    m.mnl.resize(n_blocks);
    for (std::size_t b = 0; b < m.mnl.size(); ++b) {
        auto& blk = m.mnl[b];
        blk.beta.resize(2 * p);
        for (std::size_t j = 0; j < p; ++j) {
            blk.beta[j] = high.mnl[b].beta[j];
            blk.beta[p + j] = high.mnl[b].beta[ph + j];
        }
        blk.covariance = 0.01 * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(2 * p),
                                                          static_cast<Eigen::Index>(2 * p));
    }
    return m;
}

inline std::map<ModelKey, FittedModel> small_models(const ProjectConfig& c, const RealityOutput& reality) {
    const GroundTruth truth = build_ground_truth(c.synth);
    std::map<ModelKey, FittedModel> models;
    for (Complexity tier : {Complexity::low, Complexity::medium, Complexity::high}) {
        for (Period period : {Period::period_A, Period::period_B}) {
            const auto& high = period == Period::period_A ? *truth.period_a : *truth.period_b;
            models[{ModelType::mnl, tier, period}] = truncated(high, tier, period);
            const Survey& s = period == Period::period_A ? reality.survey_a : reality.survey_b;
            models[{ModelType::rate_table, tier, period}] = fit_rate_table(s, {ModelType::rate_table, tier, period});
        }
    }
    return models;
}

inline Experiment small_experiment(const ProjectConfig& c = small_config()) {
    Population base = synthesize_base(c.synth, c.seeds.synthesis);
    RealityOutput reality = simulate_reality(base, c);
    auto models = small_models(c, reality);
    return make_experiment(c, std::move(base), models, std::move(reality.targets));
}

/// Fresh empty scratch directory below the test binary's working directory.
inline std::string scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::current_path() / "scratch" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir.parent_path());
    return dir.string();
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Concatenation of every file under `dir` in path order, with path headers.
inline std::string tree_bytes(const std::string& dir, const std::string& subdir = "points") {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(std::filesystem::path(dir) / subdir)) {
        if (e.is_regular_file()) {
            files.push_back(e.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::string all;
    for (const auto& f : files) {
        all += std::filesystem::relative(f, dir).string() + "\n" + read_file(f);
    }
    return all;
}

} // namespace fixture
