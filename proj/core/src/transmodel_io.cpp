#include "microsa/error.hpp"
#include "microsa/textio.hpp"
#include "microsa/transmodel.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace microsa {

namespace textio {

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view s) {
    if (s == "NA") {
        return std::nan("");
    }
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw ConfigError("bad number '" + std::string(s) + "'");
    }
    return v;
}

long long parse_int(std::string_view s) {
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw ConfigError("bad integer '" + std::string(s) + "'");
    }
    return v;
}

} // namespace textio

namespace {

constexpr std::string_view model_header = "# microsa-model v1";

void write_basis(std::ostream& out, const char* name, const SplineBasis& b) {
    out << "basis\t" << name << '\t' << textio::format_double(b.scale) << '\t';
    for (std::size_t i = 0; i < b.knots.size(); ++i) {
        out << (i ? "," : "") << textio::format_double(b.knots[i]);
    }
    out << '\n';
}

SplineBasis read_basis(const std::vector<std::string>& f) {
    SplineBasis b;
    b.scale = textio::parse_double(f.at(2));
    for (const auto& k : textio::split(f.at(3), ',')) {
        b.knots.push_back(textio::parse_double(k));
    }
    return b;
}

std::vector<std::string> next_fields(std::istream& in, const char* expected_tag) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ConfigError(std::string("model file truncated, expected '") + expected_tag + "'");
    }
    auto f = textio::split(line, '\t');
    if (f.empty() || f[0] != expected_tag) {
        throw ConfigError(std::string("model file: expected '") + expected_tag + "' record, got '" + line + "'");
    }
    return f;
}

} // namespace

void write_model(std::ostream& out, const FittedModel& model) {
    out << model_header << '\n';
    out << "spec\t" << to_string(model.spec.type) << '\t' << to_string(model.spec.complexity) << '\t'
        << to_string(model.spec.period) << '\n';
    write_basis(out, "age", model.basis.age);
    write_basis(out, "years_since_immigration", model.basis.years_since_immigration);
    write_basis(out, "age_youngest_child", model.basis.age_youngest_child);
    const auto names = design_names(model.spec.complexity);
    out << "design";
    for (const auto& n : names) {
        out << '\t' << n;
    }
    out << '\n';
    if (model.spec.type == ModelType::mnl) {
        for (std::size_t b = 0; b < model.mnl.size(); ++b) {
            const auto& blk = model.mnl[b];
            out << "block\t" << block_name(static_cast<int>(b)) << '\t' << blk.n_obs << '\t' << blk.iterations << '\t'
                << textio::format_double(blk.log_likelihood) << '\n';
            out << "beta";
            for (double v : blk.beta) {
                out << '\t' << textio::format_double(v);
            }
            out << '\n';
            for (Eigen::Index i = 0; i < blk.covariance.rows(); ++i) {
                out << "cov";
                for (Eigen::Index j = 0; j < blk.covariance.cols(); ++j) {
                    out << '\t' << textio::format_double(blk.covariance(i, j));
                }
                out << '\n';
            }
        }
    } else {
        for (std::size_t b = 0; b < model.rate.size(); ++b) {
            const auto& blk = model.rate[b];
            out << "block\t" << block_name(static_cast<int>(b)) << '\t' << blk.counts.size() << '\n';
            for (std::size_t c = 0; c < blk.counts.size(); ++c) {
                out << "cell\t" << c << '\t' << blk.counts[c][0] << '\t' << blk.counts[c][1] << '\t' << blk.counts[c][2]
                    << '\n';
            }
        }
    }
    out << "end\n";
}

FittedModel read_model(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != model_header) {
        throw ConfigError("not a microsa model file (missing '" + std::string(model_header) + "')");
    }
    FittedModel model;
    const auto spec = next_fields(in, "spec");
    model.spec.type = parse_model_type(spec.at(1));
    model.spec.complexity = parse_complexity(spec.at(2));
    model.spec.period = parse_period(spec.at(3));
    model.basis.age = read_basis(next_fields(in, "basis"));
    model.basis.years_since_immigration = read_basis(next_fields(in, "basis"));
    model.basis.age_youngest_child = read_basis(next_fields(in, "basis"));
    const auto design = next_fields(in, "design");
    const std::size_t p = design_size(model.spec.complexity);
    if (design.size() != p + 1) {
        throw ConfigError("model file: design width does not match the complexity tier");
    }
    if (model.spec.type == ModelType::mnl) {
        model.mnl.resize(n_blocks);
        for (int b = 0; b < n_blocks; ++b) {
            const auto head = next_fields(in, "block");
            if (head.at(1) != block_name(b)) {
                throw ConfigError("model file: expected block " + block_name(b));
            }
            MnlBlock& blk = model.mnl[static_cast<std::size_t>(b)];
            blk.n_obs = textio::parse_int(head.at(2));
            blk.iterations = static_cast<int>(textio::parse_int(head.at(3)));
            blk.log_likelihood = textio::parse_double(head.at(4));
            const auto beta = next_fields(in, "beta");
            if (beta.size() != 2 * p + 1) {
                throw ConfigError("model file: coefficient count mismatch in block " + block_name(b));
            }
            for (std::size_t j = 1; j < beta.size(); ++j) {
                blk.beta.push_back(textio::parse_double(beta[j]));
            }
            const auto q = static_cast<Eigen::Index>(2 * p);
            blk.covariance.resize(q, q);
            for (Eigen::Index i = 0; i < q; ++i) {
                const auto row = next_fields(in, "cov");
                if (row.size() != static_cast<std::size_t>(q) + 1) {
                    throw ConfigError("model file: covariance row width mismatch");
                }
                for (Eigen::Index j = 0; j < q; ++j) {
                    blk.covariance(i, j) = textio::parse_double(row[static_cast<std::size_t>(j) + 1]);
                }
            }
        }
    } else {
        model.rate.resize(n_blocks);
        const std::size_t n_cells = rate_table_cells(model.spec.complexity);
        for (int b = 0; b < n_blocks; ++b) {
            const auto head = next_fields(in, "block");
            if (head.at(1) != block_name(b) || textio::parse_int(head.at(2)) != static_cast<long long>(n_cells)) {
                throw ConfigError("model file: bad rate-table block header for " + block_name(b));
            }
            auto& counts = model.rate[static_cast<std::size_t>(b)].counts;
            counts.resize(n_cells);
            for (std::size_t c = 0; c < n_cells; ++c) {
                const auto cell = next_fields(in, "cell");
                for (std::size_t k = 0; k < 3; ++k) {
                    counts[c][k] = textio::parse_int(cell.at(k + 2));
                }
            }
        }
    }
    next_fields(in, "end");
    return model;
}

void save_model(const std::string& path, const FittedModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write model file " + path);
    }
    write_model(out, model);
}

FittedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read model file " + path);
    }
    return read_model(in);
}

} // namespace microsa
