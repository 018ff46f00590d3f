#include "microsa/error.hpp"
#include "microsa/experiment.hpp"
#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <set>

using namespace microsa;

namespace {

std::size_t product_count(const GridSpec& g) {
    const std::size_t shared = g.complexities.size() * g.adjustments.size() * g.periods.size() * g.extmcs.size() *
                               g.intmcs.size() * g.migrations.size();
    std::size_t n = 0;
    for (ModelType t : g.types) {
        n += shared * (t == ModelType::mnl ? g.coeffs.size() : 1);
    }
    return n;
}

GridSpec sixteen_points() {
    GridSpec g;
    g.types = {ModelType::mnl, ModelType::rate_table};
    g.complexities = {Complexity::low, Complexity::high};
    g.adjustments = {true};
    g.periods = {Period::period_B};
    g.coeffs = {0};
    g.extmcs = {1, 2};
    g.intmcs = {1, 2};
    g.migrations = {MigrationVariant::full};
    return g;
}

StoreManifest manifest(const GridSpec& g) { return StoreManifest{1, "testhash", "test", g}; }

const Experiment& shared_experiment() {
    static const Experiment e = fixture::small_experiment();
    return e;
}

} // namespace

TEST(Grid, FullScaleDimensions) {
    const auto points = enumerate_grid(GridSpec::full_scale());
    std::size_t mnl = 0, rt = 0;
    for (const auto& p : points) {
        (p.type == ModelType::mnl ? mnl : rt) += 1;
    }
    EXPECT_EQ(mnl, 13200u);
    EXPECT_EQ(rt, 1200u);
    EXPECT_EQ(GridSpec::full_scale().count(), 14400u);
}

TEST(Grid, SingletonGrid) {
    GridSpec g;
    g.types = {ModelType::mnl};
    g.complexities = {Complexity::medium};
    g.adjustments = {false};
    g.periods = {Period::period_A};
    g.coeffs = {0};
    g.extmcs = {1};
    g.intmcs = {1};
    g.migrations = {MigrationVariant::full};
    EXPECT_EQ(enumerate_grid(g).size(), 1u);
}

TEST(Grid, DeskCountMatchesProduct) {
    const GridSpec g = GridSpec::desk();
    EXPECT_EQ(enumerate_grid(g).size(), product_count(g));
    EXPECT_EQ(g.count(), product_count(g));
    EXPECT_EQ(product_count(g), 960u);
}

TEST(Grid, RateTableOnlyCoeffZeroAndCanonicalOrder) {
    const auto points = enumerate_grid(GridSpec::desk());
    std::set<std::string> ids;
    for (const auto& p : points) {
        if (p.type == ModelType::rate_table) {
            EXPECT_EQ(p.coeff, 0);
        }
        EXPECT_TRUE(ids.insert(p.id()).second);
        EXPECT_EQ(parse_point_id(p.id()), p);
    }
    EXPECT_EQ(enumerate_grid(GridSpec::desk()), points);
    EXPECT_THROW(parse_point_id("mnl-bogus"), LookupError);
}

TEST(Grid, ValidationRejectsBadLevels) {
    GridSpec g;
    g.intmcs = {};
    EXPECT_THROW(g.validate(), ConfigError);
    g = GridSpec{};
    g.extmcs = {1, 1};
    EXPECT_THROW(g.validate(), ConfigError);
    g = GridSpec{};
    g.intmcs = {0};
    EXPECT_THROW(g.validate(), ConfigError);
}

TEST(Seeds, NoCollisionsOverFullScaleGrid) {
    const SeedScheme seeds{6, 7, InternalNesting::crossed};
    EXPECT_NO_THROW(check_seed_collisions(GridSpec::full_scale(), seeds, {1, 2, 3}, 2012, 2026));
}

TEST(Seeds, ScopeLawOutsideStreamFactors) {
    const Experiment& e = shared_experiment();
    FactorPoint a;
    a.type = ModelType::mnl;
    a.complexity = Complexity::low;
    a.adjustment = true;
    FactorPoint b = a;
    b.complexity = Complexity::high;
    b.adjustment = false;
    b.period = Period::period_B;
    b.migration = MigrationVariant::selected;
    b.coeff = 1;
    const RunConfig ca = e.run_config(a);
    const RunConfig cb = e.run_config(b);
    for (int year = e.first_year; year <= e.projection_end; ++year) {
        for (DistrictId d : {1, 2}) {
            EXPECT_EQ(ca.seeds.internal(ca.intmc, ca.extmc, d, year), cb.seeds.internal(cb.intmc, cb.extmc, d, year));
            for (ModuleId m : module_order) {
                EXPECT_EQ(ca.seeds.external(ca.extmc, d, year, m), cb.seeds.external(cb.extmc, d, year, m));
            }
        }
    }
}

TEST(ExecuteGrid, ParallelismDoesNotChangeStore) {
    const Experiment& e = shared_experiment();
    const GridSpec g = sixteen_points();
    const auto points = enumerate_grid(g);
    ASSERT_EQ(points.size(), 16u);
    const std::string d1 = fixture::scratch_dir("jobs1");
    const std::string d8 = fixture::scratch_dir("jobs8");
    const auto s1 = execute_grid(points, e, 1, ResultStore::create(d1, manifest(g), false));
    const auto s8 = execute_grid(points, e, 8, ResultStore::create(d8, manifest(g), false));
    EXPECT_EQ(s1.completed, 16u);
    EXPECT_EQ(s8.completed, 16u);
    EXPECT_EQ(s1.failed, 0u);
    EXPECT_EQ(fixture::tree_bytes(d1), fixture::tree_bytes(d8));
    EXPECT_EQ(fixture::read_file(std::filesystem::path(d1) / "manifest.json"),
              fixture::read_file(std::filesystem::path(d8) / "manifest.json"));
}

TEST(ExecuteGrid, ResumeAfterInterruption) {
    const Experiment& e = shared_experiment();
    const GridSpec g = sixteen_points();
    const auto points = enumerate_grid(g);
    const std::string full = fixture::scratch_dir("uninterrupted");
    execute_grid(points, e, 2, ResultStore::create(full, manifest(g), false));

    const std::string dir = fixture::scratch_dir("interrupted");
    std::atomic<bool> stop{false};
    std::size_t seen = 0;
    const auto first = execute_grid(
        points, e, 1, ResultStore::create(dir, manifest(g), false),
        [&](const ProgressEvent& ev) {
            if (ev.status == "done" && ++seen == 5) {
                stop = true;
            }
        },
        &stop);
    EXPECT_LT(first.completed, 16u);
    EXPECT_THROW(ResultStore::create(dir, manifest(g), false), StateError);
    StoreManifest other = manifest(g);
    other.config_hash = "different";
    EXPECT_THROW(ResultStore::create(dir, other, true), StateError);

    const ResultStore resumed = ResultStore::create(dir, manifest(g), true);
    const auto second = execute_grid(points, e, 4, resumed);
    EXPECT_EQ(second.skipped, first.completed);
    EXPECT_EQ(second.completed + second.skipped, 16u);
    EXPECT_EQ(fixture::tree_bytes(dir), fixture::tree_bytes(full));
}

TEST(ExecuteGrid, EmptyGridEmptyStore) {
    const std::string dir = fixture::scratch_dir("empty");
    GridSpec g = sixteen_points();
    const ResultStore store = ResultStore::create(dir, manifest(g), false);
    const auto s = execute_grid({}, shared_experiment(), 3, store);
    EXPECT_EQ(s.completed + s.skipped + s.failed, 0u);
    EXPECT_TRUE(store.completed_ids().empty());
    EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(dir) / "manifest.json"));
}

TEST(ExecuteGrid, FailuresAreRecordedAndDoNotAbort) {
    Experiment e = shared_experiment();
    e.models.erase(ModelKey{ModelType::mnl, Complexity::high, Period::period_B});
    const GridSpec g = sixteen_points();
    const std::string dir = fixture::scratch_dir("failing");
    const ResultStore store = ResultStore::create(dir, manifest(g), false);
    const auto s = execute_grid(enumerate_grid(g), e, 2, store);
    EXPECT_EQ(s.failed, 4u);
    EXPECT_EQ(s.completed, 12u);
    EXPECT_EQ(store.failed_ids().size(), 4u);
    for (const auto& id : store.failed_ids()) {
        EXPECT_EQ(parse_point_id(id).complexity, Complexity::high);
    }
}

TEST(ResultStore, ManifestRoundTrip) {
    const std::string dir = fixture::scratch_dir("manifest");
    const StoreManifest m = manifest(GridSpec::desk());
    ResultStore::create(dir, m, false);
    EXPECT_EQ(ResultStore::open(dir).manifest(), m);
}

TEST(RunPoint, RecordsCoverDistrictsAggregateAndYears) {
    const Experiment& e = shared_experiment();
    const auto recs = run_point(e, enumerate_grid(sixteen_points()).front());
    const std::size_t years = static_cast<std::size_t>(e.projection_end - e.first_year + 1);
    EXPECT_EQ(recs.size(), years * 3 * n_indicators);
    std::set<std::string> regions;
    for (const auto& r : recs) {
        regions.insert(r.region);
    }
    EXPECT_EQ(regions, (std::set<std::string>{"1", "2", "aggregate"}));
}
