#include "microsa/experiment.hpp"

#include "microsa/error.hpp"
#include "microsa/textio.hpp"

#include "json_io.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <sstream>

namespace microsa {

namespace {

template <typename T>
void check_levels(const std::vector<T>& levels, std::string_view factor) {
    if (levels.empty()) {
        throw ConfigError("grid factor '" + std::string(factor) + "' has no levels");
    }
    std::set<T> unique(levels.begin(), levels.end());
    if (unique.size() != levels.size()) {
        throw ConfigError("grid factor '" + std::string(factor) + "' lists a level twice");
    }
}

int parse_prefixed(std::string_view s, char prefix, std::string_view id) {
    if (s.size() < 2 || s[0] != prefix) {
        throw LookupError("malformed factor point id '" + std::string(id) + "'");
    }
    try {
        return static_cast<int>(textio::parse_int(s.substr(1)));
    } catch (const Error&) {
        throw LookupError("malformed factor point id '" + std::string(id) + "'");
    }
}

} // namespace

Factor parse_factor(std::string_view name) {
    for (std::size_t i = 0; i < factor_names.size(); ++i) {
        if (factor_names[i] == name) {
            return static_cast<Factor>(i);
        }
    }
    throw LookupError("unknown factor '" + std::string(name) + "'");
}

std::string FactorPoint::level(Factor f) const {
    switch (f) {
    case Factor::type:
        return std::string(to_string(type));
    case Factor::complexity:
        return std::string(to_string(complexity));
    case Factor::adjustment:
        return adjustment ? "yes" : "no";
    case Factor::period:
        return std::string(to_string(period));
    case Factor::coeff:
        return std::to_string(coeff);
    case Factor::extmc:
        return std::to_string(extmc);
    case Factor::intmc:
        return std::to_string(intmc);
    case Factor::migration:
        return std::string(to_string(migration));
    }
    return {};
}

std::string FactorPoint::id() const {
    std::ostringstream out;
    out << to_string(type) << '-' << to_string(complexity) << "-adj_" << (adjustment ? "yes" : "no") << '-'
        << to_string(period) << "-c" << coeff << "-e" << extmc << "-i" << intmc << '-' << to_string(migration);
    return out.str();
}

FactorPoint parse_point_id(std::string_view id) {
    const auto parts = textio::split(id, '-');
    if (parts.size() != 8) {
        throw LookupError("malformed factor point id '" + std::string(id) + "'");
    }
    FactorPoint p;
    try {
        p.type = parse_model_type(parts[0]);
        p.complexity = parse_complexity(parts[1]);
        if (parts[2] == "adj_yes") {
            p.adjustment = true;
        } else if (parts[2] == "adj_no") {
            p.adjustment = false;
        } else {
            throw LookupError("bad adjustment level");
        }
        p.period = parse_period(parts[3]);
        p.migration = parse_migration_variant(parts[7]);
    } catch (const Error&) {
        throw LookupError("malformed factor point id '" + std::string(id) + "'");
    }
    p.coeff = parse_prefixed(parts[4], 'c', id);
    p.extmc = parse_prefixed(parts[5], 'e', id);
    p.intmc = parse_prefixed(parts[6], 'i', id);
    return p;
}

GridSpec GridSpec::full_scale() {
    GridSpec g;
    g.coeffs.clear();
    for (int c = 0; c <= 10; ++c) {
        g.coeffs.push_back(c);
    }
    g.extmcs = {1, 2, 3, 4, 5};
    g.intmcs.clear();
    for (int i = 1; i <= 10; ++i) {
        g.intmcs.push_back(i);
    }
    return g;
}

GridSpec GridSpec::desk() { return GridSpec{}; }

std::size_t GridSpec::count() const {
    const std::size_t shared = complexities.size() * adjustments.size() * periods.size() * extmcs.size() *
                               intmcs.size() * migrations.size();
    const bool has_zero = std::find(coeffs.begin(), coeffs.end(), 0) != coeffs.end();
    std::size_t n = 0;
    for (ModelType t : types) {
        n += t == ModelType::mnl ? shared * coeffs.size() : (has_zero ? shared : 0);
    }
    return n;
}

void GridSpec::validate() const {
    check_levels(types, "type");
    check_levels(complexities, "compl");
    check_levels(adjustments, "adju");
    check_levels(periods, "period");
    check_levels(coeffs, "coeff");
    check_levels(extmcs, "extmc");
    check_levels(intmcs, "intmc");
    check_levels(migrations, "migr");
    for (int c : coeffs) {
        if (c < 0) {
            throw ConfigError("coefficient draw levels must be >= 0");
        }
    }
    for (int v : extmcs) {
        if (v < 1) {
            throw ConfigError("extmc levels must be >= 1");
        }
    }
    for (int v : intmcs) {
        if (v < 1) {
            throw ConfigError("intmc levels must be >= 1");
        }
    }
}

std::vector<FactorPoint> enumerate_grid(const GridSpec& grid) {
    std::vector<FactorPoint> out;
    out.reserve(grid.count());
    for (ModelType type : grid.types) {
        for (Complexity c : grid.complexities) {
            for (bool adj : grid.adjustments) {
                for (Period period : grid.periods) {
                    for (int coeff : grid.coeffs) {
                        if (type == ModelType::rate_table && coeff != 0) {
                            continue;
                        }
                        for (int e : grid.extmcs) {
                            for (int i : grid.intmcs) {
                                for (MigrationVariant m : grid.migrations) {
                                    out.push_back(FactorPoint{type, c, adj, period, coeff, e, i, m});
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    return out;
}

void check_seed_collisions(const GridSpec& grid, const SeedScheme& seeds, const std::vector<DistrictId>& districts,
                           int first_year, int last_year) {
    std::vector<std::uint64_t> all;
    for (int e : grid.extmcs) {
        for (DistrictId d : districts) {
            for (int y = first_year; y <= last_year; ++y) {
                for (ModuleId m : module_order) {
                    if (m != ModuleId::employment && m != ModuleId::aging) {
                        all.push_back(seeds.external(e, d, y, m));
                    }
                }
            }
        }
    }
    const std::vector<int> ext_levels =
        seeds.nesting == InternalNesting::nested ? grid.extmcs : std::vector<int>{grid.extmcs.front()};
    for (int i : grid.intmcs) {
        for (int e : ext_levels) {
            for (DistrictId d : districts) {
                for (int y = first_year; y <= last_year; ++y) {
                    all.push_back(seeds.internal(i, e, d, y));
                }
            }
        }
    }
    std::sort(all.begin(), all.end());
    const auto dup = std::adjacent_find(all.begin(), all.end());
    if (dup != all.end()) {
        throw DesignError("stream seed collision on value " + std::to_string(*dup));
    }
}

RunConfig Experiment::run_config(const FactorPoint& point) const {
    const auto it = models.find(ModelKey{point.type, point.complexity, point.period});
    if (it == models.end()) {
        throw LookupError("no fitted model for " +
                          ModelSpec{point.type, point.complexity, point.period}.name());
    }
    const auto& model = it->second;
    const std::uint64_t seed =
        mix_seed(coefficient_seed, {static_cast<std::uint64_t>(point.type), static_cast<std::uint64_t>(point.complexity),
                                    static_cast<std::uint64_t>(point.period)});
    RunConfig config;
    config.first_year = first_year;
    config.benchmark_end = benchmark_end;
    config.projection_end = projection_end;
    config.regimes = {PredictorRegime{std::numeric_limits<int>::min(),
                                      std::make_shared<ModelPredictor>(model, coefficient_draw(*model, point.coeff, seed))}};
    config.targets = targets;
    config.adjust_projection = point.adjustment;
    config.alignment = alignment;
    config.demography = demography;
    config.migration = point.migration;
    config.seeds = seeds;
    config.extmc = point.extmc;
    config.intmc = point.intmc;
    return config;
}

std::vector<OutputRecord> output_records(const std::vector<RunRecord>& records) {
    std::vector<OutputRecord> out;
    std::size_t i = 0;
    while (i < records.size()) {
        const int year = records[i].year;
        IndicatorCounts pooled;
        for (; i < records.size() && records[i].year == year; ++i) {
            pooled += records[i].counts;
            const auto values = indicator_values(records[i].counts);
            for (std::size_t k = 0; k < n_indicators; ++k) {
                out.push_back(OutputRecord{std::to_string(records[i].district), year,
                                           std::string(indicator_names[k]), values[k]});
            }
        }
        const auto values = indicator_values(pooled);
        for (std::size_t k = 0; k < n_indicators; ++k) {
            out.push_back(
                OutputRecord{std::string(aggregate_region), year, std::string(indicator_names[k]), values[k]});
        }
    }
    return out;
}

std::vector<OutputRecord> run_point(const Experiment& experiment, const FactorPoint& point) {
    if (!experiment.base) {
        throw ConfigError("experiment has no base population");
    }
    const RunState state = run_simulation(*experiment.base, experiment.run_config(point));
    return output_records(state.records);
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h = (h ^ c) * 0x100000001B3ULL;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

namespace detail {

using nlohmann::json;

json grid_to_json(const GridSpec& g) {
    json j;
    auto names = [](const auto& levels) {
        json arr = json::array();
        for (const auto& v : levels) {
            arr.push_back(std::string(to_string(v)));
        }
        return arr;
    };
    j["type"] = names(g.types);
    j["compl"] = names(g.complexities);
    json adj = json::array();
    for (bool a : g.adjustments) {
        adj.push_back(a ? "yes" : "no");
    }
    j["adju"] = adj;
    j["period"] = names(g.periods);
    j["coeff"] = g.coeffs;
    j["extmc"] = g.extmcs;
    j["intmc"] = g.intmcs;
    j["migr"] = names(g.migrations);
    return j;
}

GridSpec grid_from_json(const json& j) {
    if (!j.is_object()) {
        throw ConfigError("grid must be an object");
    }
    for (const auto& [key, value] : j.items()) {
        if (std::find(factor_names.begin(), factor_names.end(), key) == factor_names.end()) {
            throw ConfigError("grid: unknown factor '" + key + "'");
        }
    }
    GridSpec g = GridSpec::desk();
    auto strings = [&](const char* key, auto parse, auto& target) {
        if (!j.contains(key)) {
            return;
        }
        target.clear();
        for (const auto& v : j.at(key)) {
            if (!v.is_string()) {
                throw ConfigError(std::string("grid.") + key + ": levels must be strings");
            }
            target.push_back(parse(v.template get<std::string>()));
        }
    };
    auto ints = [&](const char* key, std::vector<int>& target) {
        if (!j.contains(key)) {
            return;
        }
        target.clear();
        for (const auto& v : j.at(key)) {
            if (!v.is_number_integer()) {
                throw ConfigError(std::string("grid.") + key + ": levels must be integers");
            }
            target.push_back(v.get<int>());
        }
    };
    try {
        strings("type", [](const std::string& s) { return parse_model_type(s); }, g.types);
        strings("compl", [](const std::string& s) { return parse_complexity(s); }, g.complexities);
        strings("period", [](const std::string& s) { return parse_period(s); }, g.periods);
        strings("migr", [](const std::string& s) { return parse_migration_variant(s); }, g.migrations);
        if (j.contains("adju")) {
            g.adjustments.clear();
            for (const auto& v : j.at("adju")) {
                const std::string s = v.is_string() ? v.get<std::string>() : "";
                if (s != "yes" && s != "no") {
                    throw ConfigError("grid.adju: levels must be \"yes\" or \"no\"");
                }
                g.adjustments.push_back(s == "yes");
            }
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("grid: ") + e.what());
    }
    ints("coeff", g.coeffs);
    ints("extmc", g.extmcs);
    ints("intmc", g.intmcs);
    g.validate();
    return g;
}

} // namespace detail

} // namespace microsa
