#include "microsa/alignment.hpp"

#include "microsa/error.hpp"
#include "microsa/textio.hpp"

#include <cmath>
#include <limits>
#include <istream>
#include <ostream>
#include <sstream>

namespace microsa {

namespace {

/// Neumaier-compensated accumulator.
struct CompensatedSum {
    double sum = 0.0;
    double compensation = 0.0;

    void add(double v) noexcept {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    double value() const noexcept { return sum + compensation; }
};

void expected_totals(const ProbabilityMatrix& p, const std::vector<double>& weights, std::vector<double>& totals) {
    const std::size_t k = p.categories;
    std::vector<CompensatedSum> acc(k);
    for (std::size_t i = 0; i < p.rows(); ++i) {
        const auto row = p.row(i);
        double denom = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            denom += row[c] * weights[c];
        }
        for (std::size_t c = 0; c < k; ++c) {
            acc[c].add(row[c] * weights[c] / denom);
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        totals[c] = acc[c].value();
    }
}

void scale_rows(const ProbabilityMatrix& in, const std::vector<double>& weights, ProbabilityMatrix& out) {
    const std::size_t k = in.categories;
    out.categories = k;
    out.values.resize(in.values.size());
    for (std::size_t i = 0; i < in.rows(); ++i) {
        const auto src = in.row(i);
        auto dst = out.row(i);
        double denom = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            denom += src[c] * weights[c];
        }
        for (std::size_t c = 0; c < k; ++c) {
            dst[c] = src[c] * weights[c] / denom;
        }
    }
}

} // namespace

AlignmentTarget AlignmentTarget::rescaled_to(double eligible) const {
    const double total = counts[0] + counts[1] + counts[2];
    if (!(total > 0.0)) {
        throw TargetError("alignment target for district " + std::to_string(district_id) + ", year " +
                          std::to_string(year) + " has no mass");
    }
    AlignmentTarget out = *this;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        out.counts[c] = counts[c] / total * eligible;
    }
    return out;
}

LogitScaleResult logit_scale(const ProbabilityMatrix& probs, std::span<const double> targets,
                             const LogitScaleOptions& options) {
    const std::size_t k = probs.categories;
    const std::size_t n = probs.rows();
    if (targets.size() != k || options.reference >= k) {
        throw TargetError("logit_scale: target dimension does not match the category count");
    }
    double target_sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        if (!(targets[c] >= 0.0) || targets[c] > static_cast<double>(n)) {
            std::ostringstream msg;
            msg << "logit_scale: infeasible target " << targets[c] << " for category " << c << " with " << n
                << " units";
            throw TargetError(msg.str());
        }
        target_sum += targets[c];
    }
    if (std::abs(target_sum - static_cast<double>(n)) > 1e-6) {
        std::ostringstream msg;
        msg << "logit_scale: targets sum to " << target_sum << " but there are " << n << " units";
        throw TargetError(msg.str());
    }

    ProbabilityMatrix base;
    base.categories = k;
    base.values.resize(probs.values.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto src = probs.row(i);
        auto dst = base.row(i);
        double total = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            dst[c] = std::max(src[c], options.probability_floor);
            total += dst[c];
        }
        for (std::size_t c = 0; c < k; ++c) {
            dst[c] /= total;
        }
    }

    LogitScaleResult result;
    result.alpha.assign(k, 0.0);
    std::vector<double> weights(k, 1.0);
    std::vector<double> current(k, 0.0);
    double damping = 1.0;
    double previous_residual = std::numeric_limits<double>::infinity();
    for (int iter = 0;; ++iter) {
        expected_totals(base, weights, current);
        double residual = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            residual = std::max(residual, std::abs(current[c] - targets[c]));
        }
        result.iterations = iter;
        result.residual = residual;
        if (residual <= options.tolerance || n == 0) {
            break;
        }
        if (iter >= options.max_iterations) {
            std::ostringstream msg;
            msg << "logit_scale: no convergence after " << options.max_iterations << " iterations (residual "
                << residual << ")";
            throw ConvergenceError(msg.str(), residual);
        }
        if (residual > previous_residual) {
            damping = 0.5;
        }
        previous_residual = residual;
        for (std::size_t c = 0; c < k; ++c) {
            if (targets[c] == 0.0) {
                throw ConvergenceError("logit_scale: zero target is not attainable with floored probabilities",
                                       residual);
            }
            result.alpha[c] += damping * std::log(targets[c] / current[c]);
        }
        const double ref = result.alpha[options.reference];
        for (std::size_t c = 0; c < k; ++c) {
            result.alpha[c] -= ref;
            weights[c] = std::exp(result.alpha[c]);
        }
    }
    scale_rows(base, weights, result.adjusted);
    return result;
}

ProbabilityMatrix apply_adjustment(const ProbabilityMatrix& probs, std::span<const double> alpha, bool enabled) {
    if (!enabled) {
        return probs;
    }
    if (alpha.size() != probs.categories) {
        throw TargetError("apply_adjustment: offset dimension does not match the category count");
    }
    std::vector<double> weights(alpha.size());
    for (std::size_t c = 0; c < alpha.size(); ++c) {
        weights[c] = std::exp(alpha[c]);
    }
    ProbabilityMatrix out;
    scale_rows(probs, weights, out);
    return out;
}

Probabilities apply_adjustment(const Probabilities& p, std::span<const double> alpha) {
    Probabilities out{};
    double denom = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) {
        out[c] = p[c] * std::exp(alpha[c]);
        denom += out[c];
    }
    for (auto& v : out) {
        v /= denom;
    }
    return out;
}

InterceptAdjustment derive_carry_forward(DistrictId district, const std::map<int, std::vector<double>>& history,
                                         CarryForwardPolicy policy) {
    if (history.empty()) {
        throw StateError("no aligned benchmark year for district " + std::to_string(district));
    }
    switch (policy) {
    case CarryForwardPolicy::last_carried_forward:
        break;
    }
    const auto& [year, alpha] = *history.rbegin();
    return InterceptAdjustment{district, year, alpha};
}

void BenchmarkTargets::set(const AlignmentTarget& target) {
    targets_[{target.district_id, target.year}] = target;
}

const AlignmentTarget* BenchmarkTargets::find(DistrictId district, int year) const {
    const auto it = targets_.find({district, year});
    return it == targets_.end() ? nullptr : &it->second;
}

void write_benchmark_csv(std::ostream& out, const BenchmarkTargets& targets) {
    out << "district,year,category,count\n";
    for (const auto& [key, t] : targets.all()) {
        for (std::size_t c = 0; c < t.counts.size(); ++c) {
            out << t.district_id << ',' << t.year << ',' << to_string(static_cast<Employment>(c)) << ','
                << textio::format_double(t.counts[c]) << '\n';
        }
    }
}

BenchmarkTargets read_benchmark_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "district,year,category,count") {
        throw ConfigError("benchmark file: expected header 'district,year,category,count'");
    }
    std::map<std::pair<DistrictId, int>, AlignmentTarget> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto f = textio::split(line, ',');
        if (f.size() != 4) {
            throw ConfigError("benchmark file line " + std::to_string(line_no) + ": expected 4 fields");
        }
        const auto district = static_cast<DistrictId>(textio::parse_int(f[0]));
        const auto year = static_cast<int>(textio::parse_int(f[1]));
        const Employment category = parse_employment(f[2]);
        if (category == Employment::not_eligible) {
            throw ConfigError("benchmark file line " + std::to_string(line_no) + ": not_eligible is not a target");
        }
        const double count = textio::parse_double(f[3]);
        if (!(count >= 0.0)) {
            throw TargetError("benchmark file line " + std::to_string(line_no) + ": negative count");
        }
        auto& t = rows[{district, year}];
        t.district_id = district;
        t.year = year;
        t.counts[static_cast<std::size_t>(category)] = count;
    }
    BenchmarkTargets out;
    for (const auto& [key, t] : rows) {
        out.set(t);
    }
    return out;
}

void write_adjustments_csv(std::ostream& out, const std::vector<InterceptAdjustment>& adjustments) {
    out << "district,source_year,alpha_employed,alpha_unemployed,alpha_inactive\n";
    for (const auto& a : adjustments) {
        out << a.district_id << ',' << a.source_year;
        for (double v : a.alpha) {
            out << ',' << textio::format_double(v);
        }
        out << '\n';
    }
}

} // namespace microsa
