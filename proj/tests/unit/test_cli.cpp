#include "fixtures.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code = -1;
    std::string err;
};

Result cli(const std::string& args, const std::string& dir) {
    const std::string err_path = dir + "/stderr.txt";
    const std::string cmd = std::string(MICROSA_CLI) + " " + args + " >/dev/null 2>" + err_path;
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = fixture::read_file(err_path);
    return r;
}

json desk() {
    std::ifstream in(std::string(MICROSA_CONFIG_DIR) + "/desk.json");
    return json::parse(in);
}

std::string write_config(const std::string& dir, const json& j) {
    const std::string path = dir + "/config.json";
    std::ofstream(path) << j.dump(2);
    return path;
}

json small_grid(json j, const std::string& dir) {
    j["paths"]["workspace"] = dir + "/work";
    j["paths"]["store"] = dir + "/store";
    j["grid"] = {{"type", {"mnl", "rate_table"}}, {"compl", {"low", "high"}}, {"adju", {"yes"}},
                 {"period", {"period_B"}},        {"coeff", {0, 1}},             {"extmc", {1}},
                 {"intmc", {1, 2}},               {"migr", {"full"}}};
    j["years"]["projection_end"] = 2021;
    return j;
}

} // namespace

TEST(Cli, MissingConfigKeyExitsTwoWithKeyName) {
    const std::string dir = fixture::scratch_dir("cli_missing");
    fs::create_directories(dir);
    json j = small_grid(desk(), dir);
    j["seeds"].erase("survey");
    const Result r = cli("synth -c " + write_config(dir, j), dir);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("seeds.survey"), std::string::npos) << r.err;
}

TEST(Cli, UsageErrorsAndVersion) {
    const std::string dir = fixture::scratch_dir("cli_usage");
    fs::create_directories(dir);
    EXPECT_NE(cli("", dir).code, 0);
    EXPECT_EQ(cli("--version", dir).code, 0);
    EXPECT_EQ(cli("synth -c " + dir + "/absent.json", dir).code, 2);
}

// One sequential workflow: the stages depend on each other's files.
TEST(Cli, EndToEndWorkflow) {
    const std::string dir = fixture::scratch_dir("cli_workflow");
    fs::create_directories(dir);
    const std::string cfg = write_config(dir, small_grid(desk(), dir));

    Result r = cli("synth -c " + cfg, dir);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir + "/work/base_population.txt"));
    EXPECT_TRUE(fs::exists(dir + "/work/benchmark.csv"));
    EXPECT_EQ(cli("synth -c " + cfg, dir).code, 3);

    r = cli("estimate -c " + cfg, dir);
    ASSERT_EQ(r.code, 0) << r.err;
    std::size_t models = 0;
    for (const auto& e : fs::directory_iterator(dir + "/work/models")) {
        models += e.path().extension() == ".model" ? 1 : 0;
    }
    EXPECT_EQ(models, 12u);
    const std::string first = fixture::tree_bytes(dir + "/work", "models");
    EXPECT_EQ(cli("estimate -c " + cfg, dir).code, 3);
    ASSERT_EQ(cli("estimate -c " + cfg + " --force", dir).code, 0);
    EXPECT_EQ(fixture::tree_bytes(dir + "/work", "models"), first);

    r = cli("run -c " + cfg + " --jobs 1", dir);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.err.find("\"event\":\"point\""), std::string::npos);
    const std::string serial = fixture::tree_bytes(dir + "/store");
    EXPECT_EQ(cli("run -c " + cfg, dir).code, 3);
    ASSERT_EQ(cli("run -c " + cfg + " --jobs 3 --force", dir).code, 0);
    EXPECT_EQ(fixture::tree_bytes(dir + "/store"), serial);
    r = cli("run -c " + cfg + " --resume", dir);
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.err.find("\"skipped\":12"), std::string::npos) << r.err;

    const std::string out = dir + "/analysis.csv";
    r = cli("analyze --store " + dir + "/store --indicator unemployment_rate --region aggregate --exclude type=rate_table -o " +
                out,
            dir);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(fixture::read_file(out).rfind("year,term,order,V,S,ST,defined,variance_floor", 0), 0u);
    EXPECT_EQ(cli("analyze --store " + dir + "/store --indicator unemployment_rate -o " + out, dir).code, 3);
    EXPECT_EQ(cli("analyze --store " + dir + "/store --indicator nonsense --force -o " + out, dir).code, 6);

    r = cli("report --store " + dir + "/store --summary " + dir + "/summary.csv --plot " + dir + "/plot.svg", dir);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(fixture::read_file(dir + "/summary.csv").find("compl"), std::string::npos);
    EXPECT_NE(fixture::read_file(dir + "/plot.svg").find("<svg"), std::string::npos);

    // an incomplete store is a design error naming the missing point (coeff 0,
    // since the mixed-type design only reads the point estimates)
    const std::string victim = "mnl-high-adj_yes-period_B-c0-e1-i2-full";
    fs::remove(dir + "/store/points/" + victim + ".tsv");
    r = cli("analyze --store " + dir + "/store --force -o " + out, dir);
    EXPECT_EQ(r.code, 5);
    EXPECT_NE(r.err.find(victim), std::string::npos) << r.err;
}
