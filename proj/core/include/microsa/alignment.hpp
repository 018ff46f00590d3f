#pragma once

#include "microsa/covariates.hpp"
#include "microsa/population.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace microsa {

/// Row-major n x k matrix of per-unit category probabilities.
struct ProbabilityMatrix {
    std::size_t categories = n_outcomes;
    std::vector<double> values;

    std::size_t rows() const noexcept { return categories == 0 ? 0 : values.size() / categories; }
    std::span<double> row(std::size_t i) noexcept { return {values.data() + i * categories, categories}; }
    std::span<const double> row(std::size_t i) const noexcept { return {values.data() + i * categories, categories}; }
};

using CategoryCounts = std::array<double, n_outcomes>;

struct AlignmentTarget {
    DistrictId district_id = 0;
    int year = 0;
    CategoryCounts counts{};  // employed, unemployed, inactive

    /// Rescales the target shares to a population of `eligible` persons.
    AlignmentTarget rescaled_to(double eligible) const;
};

/// Additive logit offsets per category; the reference category's offset is 0.
struct InterceptAdjustment {
    DistrictId district_id = 0;
    int source_year = 0;
    std::vector<double> alpha;
};

struct LogitScaleOptions {
    double tolerance = 1e-8;
    int max_iterations = 500;
    double probability_floor = 1e-12;
    std::size_t reference = 0;
};

struct LogitScaleResult {
    ProbabilityMatrix adjusted;
    std::vector<double> alpha;
    int iterations = 0;
    double residual = 0.0;
};

/// Bi-proportional logit scaling of probabilities onto category totals.
///
/// Solves for offsets alpha such that p'_ic = p_ic e^{alpha_c} / sum_k p_ik e^{alpha_k}
/// has column sums equal to `targets`. Iterates alpha_c <- alpha_c + d log(target_c / current_c)
/// with d = 1, switching to d = 0.5 once the residual grows; stops at max
/// absolute residual <= tolerance. Probabilities are floored at
/// `probability_floor` and renormalized first.
LogitScaleResult logit_scale(const ProbabilityMatrix& probs, std::span<const double> targets,
                             const LogitScaleOptions& options = {});

/// Applies fixed offsets (same transform as logit_scale) or returns the input unchanged.
ProbabilityMatrix apply_adjustment(const ProbabilityMatrix& probs, std::span<const double> alpha, bool enabled);
Probabilities apply_adjustment(const Probabilities& p, std::span<const double> alpha);

enum class CarryForwardPolicy { last_carried_forward };

/// Offsets of the final benchmark year; throws StateError on empty history.
InterceptAdjustment derive_carry_forward(DistrictId district, const std::map<int, std::vector<double>>& history,
                                         CarryForwardPolicy policy = CarryForwardPolicy::last_carried_forward);

/// Benchmark totals keyed by (district, year).
class BenchmarkTargets {
public:
    void set(const AlignmentTarget& target);
    const AlignmentTarget* find(DistrictId district, int year) const;
    const std::map<std::pair<DistrictId, int>, AlignmentTarget>& all() const noexcept { return targets_; }
    bool empty() const noexcept { return targets_.empty(); }

private:
    std::map<std::pair<DistrictId, int>, AlignmentTarget> targets_;
};

/// CSV with header `district,year,category,count`.
void write_benchmark_csv(std::ostream& out, const BenchmarkTargets& targets);
BenchmarkTargets read_benchmark_csv(std::istream& in);

/// CSV with header `district,source_year,alpha_employed,alpha_unemployed,alpha_inactive`.
void write_adjustments_csv(std::ostream& out, const std::vector<InterceptAdjustment>& adjustments);

} // namespace microsa
