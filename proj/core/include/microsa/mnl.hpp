#pragma once

#include "microsa/transmodel.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace microsa::mnl {

/// Design matrix and outcome codes (0 = reference, 1, 2) for one block.
struct Data {
    Eigen::MatrixXd x;
    std::vector<int> y;
    /// Optional column labels used in error messages.
    std::vector<std::string> columns;
};

inline constexpr int n_categories = n_outcomes;

/// theta = [beta_1; beta_2], each of length x.cols().
double log_likelihood(const Data& data, const Eigen::VectorXd& theta);
Eigen::VectorXd score(const Data& data, const Eigen::VectorXd& theta);
/// Observed information (negative Hessian of the log-likelihood).
Eigen::MatrixXd information(const Data& data, const Eigen::VectorXd& theta);

struct FitResult {
    Eigen::VectorXd theta;
    Eigen::MatrixXd covariance;
    double log_likelihood = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
};

/// Newton-Raphson with step halving on likelihood decrease.
///
/// Throws EstimationError (naming `block`) for too few observations, a
/// rank-deficient design, an outcome never observed, a 0/1 column whose
/// ones miss an outcome category, or divergence towards separation (large
/// coefficients or standard errors); ConvergenceError with the final gradient max-norm when the
/// iteration cap is reached.
FitResult fit(const Data& data, const FitOptions& options, const std::string& block);

} // namespace microsa::mnl
