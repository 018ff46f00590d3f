#pragma once

#include "microsa/population.hpp"
#include "microsa/simkernel.hpp"
#include "microsa/transmodel.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace microsa {

struct AgeBand {
    int min_age = 0;
    int max_age = 0;  // inclusive
    double share = 0.0;
};

struct DistrictSpec {
    DistrictId district_id = 0;
    std::string name;
    std::int64_t size = 0;
    double foreign_share = 0.1;
    std::array<double, 3> education{0.3, 0.5, 0.2};  // low, medium, high among adults
    /// Ground-truth logit offsets (unemployed, inactive) relative to employed.
    std::array<double, 2> truth_offset{0.0, 0.0};
};

/// Period-specific shifts of the ground-truth linear predictors.
struct GroundTruthParams {
    /// Added in period B to the unemployed logit, by previous state (employed, unemployed, inactive).
    std::array<double, 3> period_b_unemployed_shift{-0.60, -0.70, -0.35};
    std::array<double, 3> period_b_inactive_shift{0.10, -0.20, 0.10};
    /// Added in period B to the foreign and high-education effects on the unemployed logit.
    double period_b_foreign_shift = 0.40;
    double period_b_high_education_shift = -0.30;
    /// First year simulated under period B coefficients.
    int switch_year = 2016;
};

struct SynthConfig {
    int base_year = 2011;
    std::vector<DistrictSpec> districts;
    std::vector<AgeBand> age_distribution = default_age_distribution();
    double female_share = 0.51;
    /// Probability that an adult in the partnering age range lives in a couple.
    double partnered_share = 0.62;
    double married_share = 0.72;
    /// Probability that a single 18-24 year old lives with a parent.
    double parental_home_share = 0.5;
    /// Share of nationals who are naturalized immigrants.
    double naturalized_share = 0.04;
    /// Share of foreign adults who immigrated themselves.
    double foreign_immigrant_share = 0.8;
    /// Employment transitions under the ground truth applied after the initial draw.
    int burn_in_years = 3;
    GroundTruthParams truth;

    static std::vector<AgeBand> default_age_distribution();
    /// Throws ConfigError on empty districts or distributions off by more than 1e-9.
    void validate() const;
};

/// The known data-generating employment process behind the synthetic world:
/// high-tier multinomial logits per period plus per-district logit offsets.
struct GroundTruth {
    std::shared_ptr<const FittedModel> period_a;
    std::shared_ptr<const FittedModel> period_b;
    std::map<DistrictId, Probabilities> offsets;
    int switch_year = 0;

    /// Predictor for one period including district offsets.
    std::shared_ptr<const EmploymentPredictor> predictor(Period period) const;
    /// Period A before `switch_year`, period B from then on.
    std::vector<PredictorRegime> regimes() const;
};

GroundTruth build_ground_truth(const SynthConfig& config);

/// Deterministic base population for `config.base_year` (a state ready for
/// the first simulated year). District sizes equal their targets exactly.
Population synthesize_base(const SynthConfig& config, std::uint64_t seed);

} // namespace microsa
