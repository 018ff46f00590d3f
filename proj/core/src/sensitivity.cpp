#include "microsa/sensitivity.hpp"

#include "microsa/error.hpp"
#include "microsa/indicators.hpp"
#include "microsa/textio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace microsa {

namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

std::string csv_number(double v) { return std::isnan(v) ? std::string("NA") : textio::format_double(v); }

std::vector<std::string> grid_levels(const GridSpec& g, Factor f) {
    std::vector<std::string> out;
    FactorPoint p;
    switch (f) {
    case Factor::type:
        for (auto v : g.types) {
            out.emplace_back(to_string(v));
        }
        break;
    case Factor::complexity:
        for (auto v : g.complexities) {
            out.emplace_back(to_string(v));
        }
        break;
    case Factor::adjustment:
        for (bool v : g.adjustments) {
            out.emplace_back(v ? "yes" : "no");
        }
        break;
    case Factor::period:
        for (auto v : g.periods) {
            out.emplace_back(to_string(v));
        }
        break;
    case Factor::coeff:
        for (int v : g.coeffs) {
            out.push_back(std::to_string(v));
        }
        break;
    case Factor::extmc:
        for (int v : g.extmcs) {
            out.push_back(std::to_string(v));
        }
        break;
    case Factor::intmc:
        for (int v : g.intmcs) {
            out.push_back(std::to_string(v));
        }
        break;
    case Factor::migration:
        for (auto v : g.migrations) {
            out.emplace_back(to_string(v));
        }
        break;
    }
    return out;
}

void set_level(FactorPoint& p, Factor f, const std::string& level) {
    switch (f) {
    case Factor::type:
        p.type = parse_model_type(level);
        break;
    case Factor::complexity:
        p.complexity = parse_complexity(level);
        break;
    case Factor::adjustment:
        p.adjustment = level == "yes";
        break;
    case Factor::period:
        p.period = parse_period(level);
        break;
    case Factor::coeff:
        p.coeff = static_cast<int>(textio::parse_int(level));
        break;
    case Factor::extmc:
        p.extmc = static_cast<int>(textio::parse_int(level));
        break;
    case Factor::intmc:
        p.intmc = static_cast<int>(textio::parse_int(level));
        break;
    case Factor::migration:
        p.migration = parse_migration_variant(level);
        break;
    }
}

double median(std::vector<double> v) {
    if (v.empty()) {
        return nan_value;
    }
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

std::size_t OutputTable::cell_count() const {
    std::size_t n = 1;
    for (const auto& f : factors) {
        n *= f.levels.size();
    }
    return n;
}

std::size_t OutputTable::index(const std::vector<std::size_t>& levels) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < factors.size(); ++i) {
        idx = idx * factors[i].levels.size() + levels[i];
    }
    return idx;
}

std::size_t SensitivityReport::factor_position(const std::string& name) const {
    for (std::size_t i = 0; i < factors.size(); ++i) {
        if (factors[i] == name) {
            return i;
        }
    }
    throw LookupError("factor '" + name + "' is not part of the analysis");
}

SensitivityReport variance_components(const OutputTable& table) {
    const std::size_t k = table.factors.size();
    if (k > 16) {
        throw DesignError("too many factors for an exact decomposition");
    }
    for (const auto& f : table.factors) {
        if (f.levels.empty()) {
            throw DesignError("factor '" + f.name + "' has no levels");
        }
    }
    const std::size_t n = table.cell_count();
    if (table.values.size() != n) {
        throw DesignError("output table has " + std::to_string(table.values.size()) + " values for " +
                          std::to_string(n) + " cells");
    }
    const std::size_t n_terms = std::size_t{1} << k;

    SensitivityReport r;
    for (const auto& f : table.factors) {
        r.factors.push_back(f.name);
    }
    r.closed.assign(n_terms, 0.0);
    r.component.assign(n_terms, 0.0);
    r.first_order.assign(k, 0.0);
    r.main_index.assign(k, nan_value);
    r.total_index.assign(k, nan_value);
    r.second_order.assign(k, std::vector<double>(k, 0.0));
    r.pair_index.assign(k, std::vector<double>(k, nan_value));

    const bool has_nan =
        std::any_of(table.values.begin(), table.values.end(), [](double v) { return std::isnan(v); });
    if (n == 0 || has_nan) {
        r.mean = r.variance = r.higher_order = r.higher_order_index = nan_value;
        r.defined = false;
        return r;
    }

    double sum = 0.0;
    double scale = 0.0;
    for (double v : table.values) {
        sum += v;
        scale = std::max(scale, std::abs(v));
    }
    r.mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double v : table.values) {
        ss += (v - r.mean) * (v - r.mean);
    }
    r.variance = ss / static_cast<double>(n);

    // Level strides of the row-major layout.
    std::vector<std::size_t> size(k);
    std::vector<std::size_t> stride(k);
    std::size_t s = 1;
    for (std::size_t i = k; i-- > 0;) {
        size[i] = table.factors[i].levels.size();
        stride[i] = s;
        s *= size[i];
    }

    // Closed variances Var(E[Y | X_u]) from the marginal means of every subset.
    std::vector<double> marginal;
    for (std::size_t u = 1; u < n_terms; ++u) {
        std::size_t m = 1;
        for (std::size_t i = 0; i < k; ++i) {
            if (u & (std::size_t{1} << i)) {
                m *= size[i];
            }
        }
        marginal.assign(m, 0.0);
        for (std::size_t cell = 0; cell < n; ++cell) {
            std::size_t idx = 0;
            for (std::size_t i = 0; i < k; ++i) {
                if (u & (std::size_t{1} << i)) {
                    idx = idx * size[i] + (cell / stride[i]) % size[i];
                }
            }
            marginal[idx] += table.values[cell];
        }
        const double per_cell = static_cast<double>(n / m);
        double acc = 0.0;
        for (double total : marginal) {
            const double d = total / per_cell - r.mean;
            acc += d * d;
        }
        r.closed[u] = acc / static_cast<double>(m);
    }

    // Inclusion-exclusion over subsets: V_u = sum_{w subset of u} (-1)^{|u|-|w|} Vc(w).
    for (std::size_t u = 1; u < n_terms; ++u) {
        double v = 0.0;
        for (std::size_t w = u;; w = (w - 1) & u) {
            const int sign = (std::popcount(u) - std::popcount(w)) % 2 == 0 ? 1 : -1;
            v += sign * r.closed[w];
            if (w == 0) {
                break;
            }
        }
        r.component[u] = v;
    }

    const double tiny = 64.0 * std::numeric_limits<double>::epsilon() * std::max(scale, 1e-300);
    r.defined = r.variance > tiny * tiny;
    r.variance_floor = std::sqrt(r.variance) < 1e-6 * std::abs(r.mean);

    const std::size_t full = n_terms - 1;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t bit = std::size_t{1} << i;
        r.first_order[i] = r.component[bit];
        for (std::size_t j = i + 1; j < k; ++j) {
            r.second_order[i][j] = r.component[bit | (std::size_t{1} << j)];
        }
        if (r.defined) {
            r.main_index[i] = r.first_order[i] / r.variance;
            r.total_index[i] = (r.variance - r.closed[full & ~bit]) / r.variance;
            for (std::size_t j = i + 1; j < k; ++j) {
                r.pair_index[i][j] = r.second_order[i][j] / r.variance;
            }
        }
    }
    for (std::size_t u = 1; u < n_terms; ++u) {
        if (std::popcount(u) >= 3) {
            r.higher_order += r.component[u];
        }
    }
    r.higher_order_index = r.defined ? r.higher_order / r.variance : nan_value;
    return r;
}

Exclusion parse_exclusion(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
        throw ConfigError("exclusion '" + text + "' must have the form factor=level");
    }
    return Exclusion{text.substr(0, eq), text.substr(eq + 1)};
}

StoreData StoreData::load(const ResultStore& store) {
    StoreData d;
    d.grid_ = store.manifest().grid;
    const auto ids = store.completed_ids();
    std::vector<std::vector<OutputRecord>> all;
    all.reserve(ids.size());
    for (const auto& id : ids) {
        d.points_.push_back(parse_point_id(id));
        all.push_back(store.read_point(id));
    }
    std::set<std::string> regions;
    std::set<int> years;
    for (const auto& records : all) {
        for (const auto& r : records) {
            regions.insert(r.region);
            years.insert(r.year);
        }
    }
    // Districts in numeric order, aggregate last.
    for (const auto& r : regions) {
        if (r != aggregate_region) {
            d.regions_.push_back(r);
        }
    }
    std::sort(d.regions_.begin(), d.regions_.end(), [](const std::string& a, const std::string& b) {
        return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
    if (regions.count(std::string(aggregate_region)) != 0) {
        d.regions_.emplace_back(aggregate_region);
    }
    d.years_.assign(years.begin(), years.end());
    for (std::size_t i = 0; i < d.regions_.size(); ++i) {
        d.region_index_[d.regions_[i]] = i;
    }
    for (std::size_t i = 0; i < d.years_.size(); ++i) {
        d.year_index_[d.years_[i]] = i;
    }
    const std::size_t per_point = d.regions_.size() * d.years_.size() * n_indicators;
    d.values_.assign(d.points_.size() * per_point, nan_value);
    for (std::size_t p = 0; p < d.points_.size(); ++p) {
        d.point_index_[d.points_[p]] = p;
        for (const auto& r : all[p]) {
            const std::size_t idx = p * per_point +
                                    (d.region_index_.at(r.region) * d.years_.size() + d.year_index_.at(r.year)) *
                                        n_indicators +
                                    indicator_index(r.indicator);
            d.values_[idx] = r.value;
        }
    }
    return d;
}

bool StoreData::has_point(const FactorPoint& p) const { return point_index_.count(p) != 0; }

void StoreData::check_region(const std::string& region) const {
    if (region_index_.count(region) == 0) {
        throw LookupError("unknown region '" + region + "'");
    }
}

double StoreData::value(const FactorPoint& p, const std::string& region, const std::string& indicator,
                        int year) const {
    const auto pi = point_index_.find(p);
    if (pi == point_index_.end()) {
        throw LookupError("point " + p.id() + " is not in the store");
    }
    check_region(region);
    const auto yi = year_index_.find(year);
    if (yi == year_index_.end()) {
        throw LookupError("year " + std::to_string(year) + " is not in the store");
    }
    const std::size_t per_point = regions_.size() * years_.size() * n_indicators;
    return values_[pi->second * per_point + (region_index_.at(region) * years_.size() + yi->second) * n_indicators +
                   indicator_index(indicator)];
}

AnalysisDesign analysis_design(const GridSpec& grid, const std::vector<Exclusion>& exclusions) {
    std::vector<std::vector<std::string>> levels(n_factors);
    for (std::size_t f = 0; f < n_factors; ++f) {
        levels[f] = grid_levels(grid, static_cast<Factor>(f));
    }
    for (const auto& ex : exclusions) {
        Factor f{};
        try {
            f = parse_factor(ex.factor);
        } catch (const LookupError&) {
            throw ConfigError("exclusion names unknown factor '" + ex.factor + "'");
        }
        auto& lv = levels[static_cast<std::size_t>(f)];
        const auto it = std::find(lv.begin(), lv.end(), ex.level);
        if (it == lv.end()) {
            throw ConfigError("exclusion " + ex.factor + "=" + ex.level + " names a level not in the grid");
        }
        lv.erase(it);
        if (lv.empty()) {
            throw DesignError("exclusions remove every level of factor '" + ex.factor + "'");
        }
    }
    auto& coeff = levels[static_cast<std::size_t>(Factor::coeff)];
    const auto& types = levels[static_cast<std::size_t>(Factor::type)];
    const bool has_rate_table = std::find(types.begin(), types.end(), "rate_table") != types.end();
    if (has_rate_table) {
        if (std::find(coeff.begin(), coeff.end(), "0") == coeff.end()) {
            throw DesignError("rate-table analyses need coefficient draw 0 in the grid");
        }
        coeff = {"0"};
    }

    AnalysisDesign design;
    for (std::size_t f = 0; f < n_factors; ++f) {
        if (levels[f].size() > 1) {
            design.factors.push_back(static_cast<Factor>(f));
            design.levels.push_back(levels[f]);
        }
    }
    // Cross product in canonical order over all factors (single levels fixed).
    std::vector<std::size_t> pos(n_factors, 0);
    for (;;) {
        FactorPoint p;
        for (std::size_t f = 0; f < n_factors; ++f) {
            set_level(p, static_cast<Factor>(f), levels[f][pos[f]]);
        }
        design.points.push_back(p);
        std::size_t f = n_factors;
        while (f > 0) {
            --f;
            if (++pos[f] < levels[f].size()) {
                break;
            }
            pos[f] = 0;
            if (f == 0) {
                return design;
            }
        }
    }
}

OutputTable build_table(const StoreData& data, const AnalysisDesign& design, const std::string& indicator,
                        const std::string& region, int year) {
    indicator_index(indicator);
    data.check_region(region);
    OutputTable table;
    for (std::size_t i = 0; i < design.factors.size(); ++i) {
        table.factors.push_back(
            TableFactor{std::string(factor_names[static_cast<std::size_t>(design.factors[i])]), design.levels[i]});
    }
    std::vector<std::string> missing;
    for (const auto& p : design.points) {
        if (!data.has_point(p)) {
            missing.push_back(p.id());
        }
    }
    if (!missing.empty()) {
        std::ostringstream msg;
        msg << "store is incomplete for this analysis: " << missing.size() << " missing point(s):";
        for (std::size_t i = 0; i < missing.size() && i < 20; ++i) {
            msg << ' ' << missing[i];
        }
        if (missing.size() > 20) {
            msg << " ...";
        }
        throw DesignError(msg.str());
    }
    // Design points are in canonical nesting order with single-level factors
    // fixed, which is exactly the row-major layout of the retained factors.
    table.values.reserve(design.points.size());
    for (const auto& p : design.points) {
        table.values.push_back(data.value(p, region, indicator, year));
    }
    return table;
}

std::vector<YearReport> report_series(const StoreData& data, const std::string& indicator, const std::string& region,
                                      const std::vector<Exclusion>& exclusions) {
    indicator_index(indicator);
    data.check_region(region);
    const AnalysisDesign design = analysis_design(data.grid(), exclusions);
    std::vector<YearReport> out;
    for (int year : data.years()) {
        out.push_back(YearReport{year, variance_components(build_table(data, design, indicator, region, year))});
    }
    return out;
}

void write_report_csv(std::ostream& out, const std::vector<YearReport>& series) {
    out << "year,term,order,V,S,ST,defined,variance_floor\n";
    for (const auto& yr : series) {
        const auto& r = yr.report;
        const std::string flags = std::string(r.defined ? "1" : "0") + "," + (r.variance_floor ? "1" : "0");
        out << yr.year << ",total,0," << csv_number(r.variance) << "," << (r.defined ? "1" : "NA") << ",NA," << flags
            << '\n';
        for (std::size_t i = 0; i < r.factors.size(); ++i) {
            out << yr.year << ',' << r.factors[i] << ",1," << csv_number(r.first_order[i]) << ','
                << csv_number(r.main_index[i]) << ',' << csv_number(r.total_index[i]) << ',' << flags << '\n';
        }
        for (std::size_t i = 0; i < r.factors.size(); ++i) {
            for (std::size_t j = i + 1; j < r.factors.size(); ++j) {
                out << yr.year << ',' << r.factors[i] << ':' << r.factors[j] << ",2,"
                    << csv_number(r.second_order[i][j]) << ',' << csv_number(r.pair_index[i][j]) << ",NA," << flags
                    << '\n';
            }
        }
        out << yr.year << ",higher_order,3," << csv_number(r.higher_order) << ',' << csv_number(r.higher_order_index)
            << ",NA," << flags << '\n';
    }
}

std::vector<SummaryRow> summarize(const StoreData& data, const std::vector<int>& years) {
    const GridSpec& grid = data.grid();
    const bool mixed = grid.types.size() > 1;
    const bool can_exclude_low =
        std::find(grid.complexities.begin(), grid.complexities.end(), Complexity::low) != grid.complexities.end() &&
        grid.complexities.size() > 1;

    std::vector<SummaryRow> rows;
    auto collect = [&](const std::vector<Exclusion>& exclusions, const std::string& scope,
                       const std::vector<Factor>& only) {
        const AnalysisDesign design = analysis_design(grid, exclusions);
        std::map<Factor, std::vector<double>> values;
        for (const auto& name : indicator_names) {
            for (const auto& region : data.regions()) {
                for (int year : years) {
                    const auto rep = variance_components(build_table(data, design, std::string(name), region, year));
                    if (!rep.defined) {
                        continue;
                    }
                    for (std::size_t i = 0; i < design.factors.size(); ++i) {
                        values[design.factors[i]].push_back(rep.main_index[i]);
                    }
                }
            }
        }
        for (Factor f : design.factors) {
            if (!only.empty() && std::find(only.begin(), only.end(), f) == only.end()) {
                continue;
            }
            const auto& v = values[f];
            SummaryRow row;
            row.factor = std::string(factor_names[static_cast<std::size_t>(f)]);
            row.scope = scope;
            row.slices = v.size();
            row.max = v.empty() ? nan_value : *std::max_element(v.begin(), v.end());
            row.median = median(v);
            rows.push_back(row);
        }
    };
    std::vector<Factor> non_coeff;
    for (std::size_t f = 0; f < n_factors; ++f) {
        if (static_cast<Factor>(f) != Factor::coeff) {
            non_coeff.push_back(static_cast<Factor>(f));
        }
    }
    collect({}, "incl_low", mixed ? non_coeff : std::vector<Factor>{});
    if (mixed) {
        collect({{"type", "rate_table"}}, "incl_low", {Factor::coeff});
    }
    if (can_exclude_low) {
        collect({{"compl", "low"}}, "excl_low", mixed ? non_coeff : std::vector<Factor>{});
        if (mixed) {
            collect({{"compl", "low"}, {"type", "rate_table"}}, "excl_low", {Factor::coeff});
        }
    }
    return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << "factor,scope,max_S,median_S,slices\n";
    for (const auto& r : rows) {
        out << r.factor << ',' << r.scope << ',' << csv_number(r.max) << ',' << csv_number(r.median) << ','
            << r.slices << '\n';
    }
}

void write_area_svg(std::ostream& out, const std::vector<YearReport>& series, const std::string& title) {
    static const char* palette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                    "#edc948", "#b07aa1", "#ff9da7", "#9c755f"};
    const double width = 760.0;
    const double height = 360.0;
    const double left = 60.0;
    const double right = 160.0;
    const double top = 40.0;
    const double bottom = 40.0;
    const double pw = width - left - right;
    const double ph = height - top - bottom;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<text x=\"" << left << "\" y=\"24\" font-size=\"14\">" << title << "</text>\n";
    if (series.empty()) {
        out << "</svg>\n";
        return;
    }
    const auto& factors = series.front().report.factors;
    const std::size_t n_bands = factors.size() + 1;
    const std::size_t n = series.size();
    auto x_of = [&](std::size_t i) { return left + (n == 1 ? pw / 2 : pw * static_cast<double>(i) / (n - 1)); };
    auto y_of = [&](double s) { return top + ph * (1.0 - std::clamp(s, 0.0, 1.0)); };
    std::vector<std::vector<double>> cum(n, std::vector<double>(n_bands + 1, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = series[i].report;
        for (std::size_t b = 0; b < n_bands; ++b) {
            double s = 0.0;
            if (r.defined) {
                if (b < factors.size()) {
                    s = std::max(0.0, r.main_index[b]);
                } else {
                    double main = 0.0;
                    for (double v : r.main_index) {
                        main += v;
                    }
                    s = std::max(0.0, 1.0 - main);
                }
            }
            cum[i][b + 1] = cum[i][b] + s;
        }
    }
    for (std::size_t b = 0; b < n_bands; ++b) {
        out << "<polygon fill=\"" << palette[b % 9] << "\" fill-opacity=\"0.85\" points=\"";
        for (std::size_t i = 0; i < n; ++i) {
            out << x_of(i) << ',' << y_of(cum[i][b + 1]) << ' ';
        }
        for (std::size_t i = n; i-- > 0;) {
            out << x_of(i) << ',' << y_of(cum[i][b]) << ' ';
        }
        out << "\"/>\n";
        const std::string label = b < factors.size() ? factors[b] : "interactions";
        const double ly = top + 18.0 * static_cast<double>(b);
        out << "<rect x=\"" << width - right + 16 << "\" y=\"" << ly << "\" width=\"12\" height=\"12\" fill=\""
            << palette[b % 9] << "\"/>\n";
        out << "<text x=\"" << width - right + 34 << "\" y=\"" << ly + 10 << "\">" << label << "</text>\n";
    }
    out << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
        << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double s = t / 4.0;
        out << "<text x=\"" << left - 8 << "\" y=\"" << y_of(s) + 4 << "\" text-anchor=\"end\">" << s << "</text>\n";
    }
    for (std::size_t i = 0; i < n; ++i) {
        out << "<text x=\"" << x_of(i) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">"
            << series[i].year << "</text>\n";
    }
    out << "</svg>\n";
}

} // namespace microsa
