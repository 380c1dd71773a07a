#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace smcmc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// Particle storage: one state per row.
using StateMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Caller broke a documented precondition (dimensions, ranges, off-manifold input).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Constraint Jacobian lost full row rank at the reported point.
class SingularJacobianError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No point on the constraint manifold could be found to start a chain.
class InitializationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model quantity became numerically unusable (e.g. ill-conditioned covariance).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid run configuration, detected before any compute starts.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

/// Short printable form of a point, used in error messages.
std::string describe_point(const Vector& x);

/// log(sum(exp(values))) skipping -inf entries; returns -inf when all are -inf.
double log_sum_exp(std::span<const double> values);

/// Log-density of N(mean, L L^T) at x for lower-triangular L.
double gaussian_logpdf(const Vector& x, const Vector& mean, const Matrix& lower_factor);

}  // namespace smcmc
