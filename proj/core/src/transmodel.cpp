#include "microsa/transmodel.hpp"

#include "microsa/error.hpp"
#include "microsa/mnl.hpp"
#include "microsa/random.hpp"

#include <algorithm>
#include <cmath>

namespace microsa {

namespace {

constexpr int n_age_bins = 12;
constexpr double psd_tolerance = 1e-10;

Probabilities softmax_reference0(double eta1, double eta2) {
    const double m = std::max({0.0, eta1, eta2});
    const double e0 = std::exp(-m);
    const double e1 = std::exp(eta1 - m);
    const double e2 = std::exp(eta2 - m);
    const double total = e0 + e1 + e2;
    return {e0 / total, e1 / total, e2 / total};
}

/// Returns L with covariance = L L^T, via the symmetric eigendecomposition.
Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& cov, const std::string& block) {
    if (cov.size() == 0) {
        return cov;
    }
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, cov.cwiseAbs().maxCoeff())) {
        throw NumericalError("block " + block + ": covariance matrix is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (cov + cov.transpose()));
    if (es.info() != Eigen::Success) {
        throw NumericalError("block " + block + ": eigendecomposition of the covariance failed");
    }
    Eigen::VectorXd lambda = es.eigenvalues();
    if (lambda.minCoeff() < -psd_tolerance) {
        throw NumericalError("block " + block + ": covariance not positive semidefinite (min eigenvalue " +
                             std::to_string(lambda.minCoeff()) + ")");
    }
    lambda = lambda.cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * lambda.asDiagonal();
}

std::vector<double> draw_block(const MnlBlock& block, const Eigen::MatrixXd& factor, std::uint64_t seed) {
    const Eigen::Index q = static_cast<Eigen::Index>(block.beta.size());
    RandomStream rng(seed);
    Eigen::VectorXd z(q);
    for (Eigen::Index i = 0; i < q; ++i) {
        z(i) = rng.normal();
    }
    const Eigen::VectorXd shift = factor * z;
    std::vector<double> out(block.beta);
    for (Eigen::Index i = 0; i < q; ++i) {
        out[static_cast<std::size_t>(i)] += shift(i);
    }
    return out;
}

} // namespace

std::string ModelSpec::name() const {
    return std::string(to_string(type)) + "_" + std::string(to_string(complexity)) + "_" +
           std::string(to_string(period));
}

std::size_t FittedModel::n_coefficients() const {
    std::size_t n = 0;
    for (const auto& b : mnl) {
        n += b.beta.size();
    }
    return n;
}

CoefficientDraw point_estimate(const FittedModel& model) {
    CoefficientDraw d;
    d.draw_index = 0;
    d.beta.reserve(model.mnl.size());
    for (const auto& b : model.mnl) {
        d.beta.push_back(b.beta);
    }
    return d;
}

std::size_t rate_table_cells(Complexity tier) noexcept {
    switch (tier) {
    case Complexity::low:
        return n_age_bins;
    case Complexity::medium:
        return n_age_bins * 3 * 2;
    case Complexity::high:
        return n_age_bins * 3 * 2 * 2;
    }
    return 0;
}

std::size_t rate_table_cell(Complexity tier, const CovariateInput& x) {
    if (!is_working_age(x.age)) {
        throw SpecificationError("rate table: age " + std::to_string(x.age) + " outside the eligible range 15-74");
    }
    std::size_t cell = static_cast<std::size_t>((x.age - min_working_age) / 5);
    if (tier == Complexity::low) {
        return cell;
    }
    if (!x.education || !x.citizenship) {
        throw SpecificationError("rate table: missing education or citizenship covariate");
    }
    cell = (cell * 3 + static_cast<std::size_t>(*x.education)) * 2 + static_cast<std::size_t>(*x.citizenship);
    if (tier == Complexity::medium) {
        return cell;
    }
    if (!x.partnership) {
        throw SpecificationError("rate table: missing partnership covariate");
    }
    return cell * 2 + (*x.partnership == Partnership::single ? 0u : 1u);
}

Probabilities predict_probs(const FittedModel& model, const CoefficientDraw& draw, const CovariateInput& x) {
    const int b = block_index(x.sex, x.previous);
    if (model.spec.type == ModelType::rate_table) {
        const auto& counts = model.rate.at(static_cast<std::size_t>(b)).counts.at(rate_table_cell(model.spec.complexity, x));
        const double total = static_cast<double>(counts[0] + counts[1] + counts[2]) + 3.0;
        return {(static_cast<double>(counts[0]) + 1.0) / total, (static_cast<double>(counts[1]) + 1.0) / total,
                (static_cast<double>(counts[2]) + 1.0) / total};
    }
    const std::size_t p = design_size(model.spec.complexity);
    std::array<double, max_design_size> row{};
    design_row(model.basis, x, model.spec.complexity, std::span<double>(row.data(), p));
    const auto& beta = draw.beta.at(static_cast<std::size_t>(b));
    if (beta.size() != 2 * p) {
        throw SpecificationError("coefficient draw does not match the model tier");
    }
    double eta1 = 0.0;
    double eta2 = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        eta1 += beta[j] * row[j];
        eta2 += beta[p + j] * row[j];
    }
    return softmax_reference0(eta1, eta2);
}

CoefficientDraw coefficient_draw(const FittedModel& model, int draw_index, std::uint64_t seed) {
    if (draw_index < 0) {
        throw SpecificationError("negative coefficient draw index");
    }
    if (model.spec.type != ModelType::mnl && draw_index != 0) {
        throw SpecificationError("coefficient draws exist only for mnl models");
    }
    CoefficientDraw d = point_estimate(model);
    d.draw_index = draw_index;
    if (draw_index == 0) {
        return d;
    }
    for (std::size_t b = 0; b < model.mnl.size(); ++b) {
        const Eigen::MatrixXd factor = covariance_factor(model.mnl[b].covariance, block_name(static_cast<int>(b)));
        d.beta[b] = draw_block(model.mnl[b], factor,
                               mix_seed(seed, {static_cast<std::uint64_t>(draw_index), static_cast<std::uint64_t>(b)}));
    }
    return d;
}

std::vector<CoefficientDraw> sample_coefficients(const FittedModel& model, int n_draws, std::uint64_t seed) {
    if (n_draws < 1) {
        throw SpecificationError("sample_coefficients: n_draws must be at least 1");
    }
    if (model.spec.type != ModelType::mnl) {
        throw SpecificationError("sample_coefficients: coefficient draws exist only for mnl models");
    }
    std::vector<Eigen::MatrixXd> factors;
    factors.reserve(model.mnl.size());
    for (std::size_t b = 0; b < model.mnl.size(); ++b) {
        factors.push_back(covariance_factor(model.mnl[b].covariance, block_name(static_cast<int>(b))));
    }
    std::vector<CoefficientDraw> out;
    out.reserve(static_cast<std::size_t>(n_draws) + 1);
    out.push_back(point_estimate(model));
    for (int d = 1; d <= n_draws; ++d) {
        CoefficientDraw draw;
        draw.draw_index = d;
        for (std::size_t b = 0; b < model.mnl.size(); ++b) {
            draw.beta.push_back(draw_block(model.mnl[b], factors[b],
                                           mix_seed(seed, {static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(b)})));
        }
        out.push_back(std::move(draw));
    }
    return out;
}

FittedModel fit_mnl(const Survey& survey, const ModelSpec& spec, const FitOptions& options) {
    if (spec.type != ModelType::mnl) {
        throw SpecificationError("fit_mnl called with a non-mnl spec");
    }
    if (survey.empty()) {
        throw EstimationError("fit_mnl: empty survey");
    }
    FittedModel model;
    model.spec = spec;
    const std::size_t p = design_size(spec.complexity);
    std::array<std::vector<const SurveyRecord*>, n_blocks> by_block;
    for (const auto& r : survey) {
        by_block[static_cast<std::size_t>(block_index(r.covariates.sex, r.covariates.previous))].push_back(&r);
    }
    model.mnl.resize(n_blocks);
    for (int b = 0; b < n_blocks; ++b) {
        const auto& records = by_block[static_cast<std::size_t>(b)];
        mnl::Data data;
        data.columns = design_names(spec.complexity);
        data.x.resize(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(p));
        data.y.reserve(records.size());
        std::array<double, max_design_size> row{};
        for (std::size_t i = 0; i < records.size(); ++i) {
            design_row(model.basis, records[i]->covariates, spec.complexity, std::span<double>(row.data(), p));
            for (std::size_t j = 0; j < p; ++j) {
                data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
            }
            if (records[i]->outcome == Employment::not_eligible) {
                throw EstimationError("block " + block_name(b) + ": survey outcome not_eligible");
            }
            data.y.push_back(static_cast<int>(records[i]->outcome));
        }
        const auto fit = mnl::fit(data, options, spec.name() + " " + block_name(b));
        MnlBlock& block = model.mnl[static_cast<std::size_t>(b)];
        block.beta.assign(fit.theta.data(), fit.theta.data() + fit.theta.size());
        block.covariance = fit.covariance;
        block.log_likelihood = fit.log_likelihood;
        block.n_obs = static_cast<std::int64_t>(records.size());
        block.iterations = fit.iterations;
    }
    return model;
}

FittedModel fit_rate_table(const Survey& survey, const ModelSpec& spec) {
    if (spec.type != ModelType::rate_table) {
        throw SpecificationError("fit_rate_table called with a non-rate-table spec");
    }
    if (survey.empty()) {
        throw EstimationError("fit_rate_table: empty survey");
    }
    FittedModel model;
    model.spec = spec;
    model.rate.assign(n_blocks, RateTableBlock{std::vector<std::array<std::int64_t, n_outcomes>>(
                                    rate_table_cells(spec.complexity), {0, 0, 0})});
    for (const auto& r : survey) {
        if (r.outcome == Employment::not_eligible) {
            throw EstimationError("rate table: survey outcome not_eligible");
        }
        const int b = block_index(r.covariates.sex, r.covariates.previous);
        auto& cell = model.rate[static_cast<std::size_t>(b)].counts[rate_table_cell(spec.complexity, r.covariates)];
        ++cell[static_cast<std::size_t>(r.outcome)];
    }
    return model;
}

} // namespace microsa
