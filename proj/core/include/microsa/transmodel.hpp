#pragma once

#include "microsa/covariates.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace microsa {

struct ModelSpec {
    ModelType type = ModelType::mnl;
    Complexity complexity = Complexity::low;
    Period period = Period::period_A;

    /// e.g. "mnl_medium_period_A".
    std::string name() const;

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// One (sex, previous state) block of a multinomial logit. Coefficients are
/// stored outcome-major: p values for "unemployed" then p for "inactive",
/// both relative to the reference outcome "employed".
struct MnlBlock {
    std::vector<double> beta;
    Eigen::MatrixXd covariance;
    double log_likelihood = 0.0;
    std::int64_t n_obs = 0;
    int iterations = 0;
};

/// Cross-classified outcome counts of one (sex, previous state) block.
struct RateTableBlock {
    std::vector<std::array<std::int64_t, n_outcomes>> counts;
};

struct FittedModel {
    ModelSpec spec;
    BasisDefinition basis = BasisDefinition::standard();
    std::vector<MnlBlock> mnl;         // n_blocks entries when spec.type == mnl
    std::vector<RateTableBlock> rate;  // n_blocks entries when spec.type == rate_table

    std::size_t n_coefficients() const;
};

/// A coefficient vector for every block. Index 0 is the point estimate.
struct CoefficientDraw {
    int draw_index = 0;
    std::vector<std::vector<double>> beta;
};

CoefficientDraw point_estimate(const FittedModel& model);

/// Category probabilities (employed, unemployed, inactive).
Probabilities predict_probs(const FittedModel& model, const CoefficientDraw& draw, const CovariateInput& x);

/// Draws 1..n_draws from N(beta, covariance), prepended by the point estimate (draw 0).
///
/// Each block's covariance is factorized as Q diag(lambda) Q^T (symmetric
/// eigendecomposition) and a draw is beta + Q diag(sqrt(lambda)) z with z
/// standard normal. Draw d uses a stream seeded by M(seed, d, block), so a
/// draw does not depend on how many draws were requested.
std::vector<CoefficientDraw> sample_coefficients(const FittedModel& model, int n_draws, std::uint64_t seed);
CoefficientDraw coefficient_draw(const FittedModel& model, int draw_index, std::uint64_t seed);

struct SurveyRecord {
    PersonId person_id = no_person;
    HouseholdId household_id = -1;
    int year = 0;
    CovariateInput covariates;
    Employment outcome = Employment::employed;
};
using Survey = std::vector<SurveyRecord>;

struct FitOptions {
    int max_iterations = 100;
    double gradient_tolerance = 1e-6;
    std::int64_t min_observations = 30;
};

/// Maximum-likelihood multinomial logit per (sex, previous state) block.
FittedModel fit_mnl(const Survey& survey, const ModelSpec& spec, const FitOptions& options = {});

/// Smoothed cross-classified rate table (Laplace +1 per outcome).
///
/// Cells: low = 5-year age bins from 15 (left-closed); medium adds education
/// and citizenship; high adds partnership (single vs. in a partnership).
FittedModel fit_rate_table(const Survey& survey, const ModelSpec& spec);

std::size_t rate_table_cells(Complexity tier) noexcept;
std::size_t rate_table_cell(Complexity tier, const CovariateInput& x);

/// Household sample without replacement from `current`, keeping members
/// observed in both snapshots and eligible in `current`.
///
/// Snapshots are taken at the observation point of a simulated year (after
/// the employment transition, before ageing), so each record carries exactly
/// the covariates the transition saw.
Survey build_survey(const Population& previous, const Population& current, double fraction, std::uint64_t seed);

/// Versioned text serialization of fitted models.
void write_model(std::ostream& out, const FittedModel& model);
FittedModel read_model(std::istream& in);
void save_model(const std::string& path, const FittedModel& model);
FittedModel load_model(const std::string& path);

} // namespace microsa
