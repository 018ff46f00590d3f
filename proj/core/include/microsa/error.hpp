#pragma once

#include <stdexcept>
#include <string>

namespace microsa {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or incomplete configuration (missing keys, bad distributions).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Unknown identifier (person, household, indicator, region).
class LookupError : public Error {
public:
    using Error::Error;
};

/// Model estimation failed: too few observations, rank deficiency, separation.
class EstimationError : public Error {
public:
    using Error::Error;
};

/// An iterative solver hit its iteration cap.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual) : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Inputs do not satisfy a model's specification (missing covariate, ineligible unit).
class SpecificationError : public Error {
public:
    using Error::Error;
};

/// Numerical precondition violated (e.g. covariance not positive semidefinite).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Alignment target infeasible or inconsistent with the population.
class TargetError : public Error {
public:
    using Error::Error;
};

/// Operation invoked in an invalid state (e.g. empty alignment history).
class StateError : public Error {
public:
    using Error::Error;
};

/// Internal invariant broken during simulation (dangling references etc.).
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// Experimental design problem: incomplete factorial, missing cells.
class DesignError : public Error {
public:
    using Error::Error;
};

} // namespace microsa
