#include "microsa/mnl.hpp"

#include "microsa/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace microsa::mnl {

namespace {

constexpr double separation_bound = 30.0;
constexpr double standard_error_bound = 50.0;

std::string column_label(const Data& data, Eigen::Index j) {
    return static_cast<std::size_t>(j) < data.columns.size() ? data.columns[static_cast<std::size_t>(j)]
                                                             : "column " + std::to_string(j);
}

/// A 0/1 column is quasi-separating when its ones never meet some outcome
/// (or its zeros never do): the likelihood then has no finite maximum.
void check_binary_columns(const Data& data, const std::string& block) {
    for (Eigen::Index j = 1; j < data.x.cols(); ++j) {
        const auto col = data.x.col(j);
        if (!(col.array() == 0.0 || col.array() == 1.0).all()) {
            continue;
        }
        std::array<std::array<long, 3>, 2> counts{};
        for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
            ++counts[col(i) == 1.0 ? 1 : 0][static_cast<std::size_t>(data.y[static_cast<std::size_t>(i)])];
        }
        for (int v = 0; v < 2; ++v) {
            for (std::size_t k = 0; k < 3; ++k) {
                if (counts[v][k] == 0) {
                    throw EstimationError("block " + block + ": " + column_label(data, j) + " = " +
                                          std::to_string(v) + " never observed with outcome " + std::to_string(k) +
                                          " (quasi-separation)");
                }
            }
        }
    }
}

/// Per-observation category probabilities, n x 3.
Eigen::MatrixXd probabilities(const Data& data, const Eigen::VectorXd& theta, Eigen::VectorXd* log_lik_terms) {
    const Eigen::Index p = data.x.cols();
    const Eigen::Index n = data.x.rows();
    Eigen::MatrixXd eta(n, 2);
    eta.col(0) = data.x * theta.head(p);
    eta.col(1) = data.x * theta.segment(p, p);
    Eigen::MatrixXd pi(n, 3);
    if (log_lik_terms != nullptr) {
        log_lik_terms->resize(n);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const double m = std::max({0.0, eta(i, 0), eta(i, 1)});
        const double e0 = std::exp(-m);
        const double e1 = std::exp(eta(i, 0) - m);
        const double e2 = std::exp(eta(i, 1) - m);
        const double total = e0 + e1 + e2;
        pi(i, 0) = e0 / total;
        pi(i, 1) = e1 / total;
        pi(i, 2) = e2 / total;
        if (log_lik_terms != nullptr) {
            const int y = data.y[static_cast<std::size_t>(i)];
            const double eta_y = y == 0 ? 0.0 : eta(i, y - 1);
            (*log_lik_terms)(i) = eta_y - m - std::log(total);
        }
    }
    return pi;
}

void check_shape(const Data& data, const Eigen::VectorXd& theta) {
    if (static_cast<std::size_t>(data.x.rows()) != data.y.size() || theta.size() != 2 * data.x.cols()) {
        throw SpecificationError("mnl: inconsistent data / coefficient dimensions");
    }
}

} // namespace

double log_likelihood(const Data& data, const Eigen::VectorXd& theta) {
    check_shape(data, theta);
    Eigen::VectorXd terms;
    probabilities(data, theta, &terms);
    return terms.sum();
}

Eigen::VectorXd score(const Data& data, const Eigen::VectorXd& theta) {
    check_shape(data, theta);
    const Eigen::Index p = data.x.cols();
    const Eigen::MatrixXd pi = probabilities(data, theta, nullptr);
    Eigen::MatrixXd resid(data.x.rows(), 2);
    for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
        const int y = data.y[static_cast<std::size_t>(i)];
        resid(i, 0) = (y == 1 ? 1.0 : 0.0) - pi(i, 1);
        resid(i, 1) = (y == 2 ? 1.0 : 0.0) - pi(i, 2);
    }
    Eigen::VectorXd g(2 * p);
    g.head(p) = data.x.transpose() * resid.col(0);
    g.segment(p, p) = data.x.transpose() * resid.col(1);
    return g;
}

Eigen::MatrixXd information(const Data& data, const Eigen::VectorXd& theta) {
    check_shape(data, theta);
    const Eigen::Index p = data.x.cols();
    const Eigen::MatrixXd pi = probabilities(data, theta, nullptr);
    const Eigen::ArrayXd p1 = pi.col(1).array();
    const Eigen::ArrayXd p2 = pi.col(2).array();
    const Eigen::ArrayXd w11 = p1 * (1.0 - p1);
    const Eigen::ArrayXd w22 = p2 * (1.0 - p2);
    const Eigen::ArrayXd w12 = -p1 * p2;
    Eigen::MatrixXd info(2 * p, 2 * p);
    info.block(0, 0, p, p) = data.x.transpose() * (data.x.array().colwise() * w11).matrix();
    info.block(p, p, p, p) = data.x.transpose() * (data.x.array().colwise() * w22).matrix();
    info.block(0, p, p, p) = data.x.transpose() * (data.x.array().colwise() * w12).matrix();
    info.block(p, 0, p, p) = info.block(0, p, p, p).transpose();
    return info;
}

FitResult fit(const Data& data, const FitOptions& options, const std::string& block) {
    const Eigen::Index n = data.x.rows();
    const Eigen::Index p = data.x.cols();
    if (n < options.min_observations) {
        throw EstimationError("block " + block + ": " + std::to_string(n) + " observations, need at least " +
                              std::to_string(options.min_observations));
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.x);
    if (qr.rank() < p) {
        throw EstimationError("block " + block + ": rank deficiency (design rank " + std::to_string(qr.rank()) +
                              " < " + std::to_string(p) + " columns)");
    }
    check_binary_columns(data, block);
    std::array<double, 3> counts{0.0, 0.0, 0.0};
    for (int y : data.y) {
        counts[static_cast<std::size_t>(y)] += 1.0;
    }
    for (std::size_t k = 0; k < 3; ++k) {
        if (counts[k] == 0.0) {
            throw EstimationError("block " + block + ": outcome category " + std::to_string(k) +
                                  " never observed (separation)");
        }
    }

    // Intercept-only starting point; column 0 is the intercept.
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(2 * p);
    theta(0) = std::log(counts[1] / counts[0]);
    theta(p) = std::log(counts[2] / counts[0]);

    FitResult result;
    double ll = log_likelihood(data, theta);
    for (int iter = 0;; ++iter) {
        const Eigen::VectorXd g = score(data, theta);
        const double gnorm = g.cwiseAbs().maxCoeff();
        result.iterations = iter;
        if (gnorm < options.gradient_tolerance) {
            result.gradient_norm = gnorm;
            break;
        }
        if (iter >= options.max_iterations) {
            std::ostringstream msg;
            msg << "block " << block << ": Newton iteration did not converge after " << options.max_iterations
                << " iterations (gradient max-norm " << gnorm << ")";
            throw ConvergenceError(msg.str(), gnorm);
        }
        const Eigen::MatrixXd info = information(data, theta);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-14) {
            throw EstimationError("block " + block + ": singular information matrix (quasi-separation)");
        }
        const Eigen::VectorXd step = ldlt.solve(g);
        double t = 1.0;
        Eigen::VectorXd candidate = theta + step;
        double ll_candidate = log_likelihood(data, candidate);
        int halvings = 0;
        while (!(ll_candidate >= ll - 1e-12 * std::abs(ll)) && halvings < 50) {
            t *= 0.5;
            candidate = theta + t * step;
            ll_candidate = log_likelihood(data, candidate);
            ++halvings;
        }
        theta = candidate;
        ll = ll_candidate;
        if (theta.cwiseAbs().maxCoeff() > 10.0 * separation_bound) {
            throw EstimationError("block " + block + ": coefficients diverge (separation)");
        }
    }
    if (theta.cwiseAbs().maxCoeff() > separation_bound) {
        throw EstimationError("block " + block + ": coefficient magnitude above " +
                              std::to_string(separation_bound) + " (separation)");
    }
    const Eigen::MatrixXd info = information(data, theta);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw EstimationError("block " + block + ": information matrix not positive definite at the optimum");
    }
    Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(2 * p, 2 * p));
    for (Eigen::Index j = 0; j < 2 * p; ++j) {
        if (!(cov(j, j) < standard_error_bound * standard_error_bound)) {
            throw EstimationError("block " + block + ": standard error of " + column_label(data, j % p) +
                                  (j < p ? " (outcome 1)" : " (outcome 2)") + " above " +
                                  std::to_string(static_cast<int>(standard_error_bound)) + " (separation)");
        }
    }
    result.covariance = 0.5 * (cov + cov.transpose());
    result.theta = theta;
    result.log_likelihood = ll;
    return result;
}

} // namespace microsa::mnl
