#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Core>

namespace aniso {

/// An iterative or root-finding procedure failed to reach its target.
/// `residual` carries the last measured defect.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Inputs violate one of the structural hypotheses on (B, H, f, g).
class AdmissibilityError : public std::invalid_argument {
public:
    AdmissibilityError(std::string hypothesis, const std::string& what)
        : std::invalid_argument(what), hypothesis_(std::move(hypothesis)) {}

    /// Roman-numeral label of the violated hypothesis, e.g. "(iii)".
    const std::string& hypothesis() const noexcept { return hypothesis_; }

private:
    std::string hypothesis_;
};

/// Newton iteration stalled; the last iterate is kept for inspection.
class NonConvergenceError : public NumericError {
public:
    NonConvergenceError(const std::string& what, double residual, Eigen::VectorXd last)
        : NumericError(what, residual), last_iterate_(std::move(last)) {}

    const Eigen::VectorXd& last_iterate() const noexcept { return last_iterate_; }

private:
    Eigen::VectorXd last_iterate_;
};

}  // namespace aniso
