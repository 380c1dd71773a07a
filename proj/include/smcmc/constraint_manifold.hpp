#pragma once

#include <functional>
#include <optional>

#include "smcmc/common.hpp"

namespace smcmc {

/// Observation map h with its analytic Jacobian (d_y x d_x).
struct ObservationMap {
  std::function<Vector(const Vector&)> value;
  std::function<Matrix(const Vector&)> jacobian;
};

struct NewtonConfig {
  double tolerance = 1e-10;    // on ||c||_inf
  int max_iterations = 50;
  int divergence_window = 5;   // consecutive residual increases before giving up
};

/// The level set {x : y - h(x) = 0} for one observation time, with the
/// metric used to weight its Riemannian measure.
class ConstraintSystem {
 public:
  ConstraintSystem(int dim_x, Vector observation, ObservationMap h);
  ConstraintSystem(int dim_x, Vector observation, ObservationMap h, Matrix metric);

  int dim_x() const { return dim_x_; }
  int dim_y() const { return static_cast<int>(observation_.size()); }
  int tangent_dim() const { return dim_x() - dim_y(); }
  const Vector& observation() const { return observation_; }
  const Matrix& metric() const { return metric_; }
  bool has_identity_metric() const { return identity_metric_; }
  /// Lower Cholesky factor of the metric.
  const Matrix& metric_factor() const { return metric_factor_; }

  const ObservationMap& observation_map() const { return h_; }

 private:
  int dim_x_;
  Vector observation_;
  ObservationMap h_;
  Matrix metric_;
  Matrix metric_factor_;
  bool identity_metric_ = true;
};

/// Orthonormal tangent/normal frame at a manifold point.
struct TangentFrame {
  Vector base_point;
  Matrix tangent_basis;        // (d_x - d_y) x d_x, orthonormal rows
  Matrix normal_basis;         // d_y x d_x, rows of the constraint Jacobian
  Matrix orthonormal_normals;  // d_y x d_x, orthonormal rows spanning the normal space
};

struct TangentNormalSplit {
  Vector tangent;
  Vector normal;
};

/// y - h(x).
Vector evaluate_constraint(const ConstraintSystem& sys, const Vector& x);

/// Jacobian of the constraint, i.e. -dh(x).
Matrix constraint_jacobian(const ConstraintSystem& sys, const Vector& x);

struct GramWeight {
  double value;
  double log_value;
};

/// det(J M^{-1} J^T)^{-1/2}; throws SingularJacobianError when the Gram matrix is not SPD.
GramWeight gram_weight(const ConstraintSystem& sys, const Vector& x);
double log_gram_weight(const ConstraintSystem& sys, const Vector& x);

TangentFrame tangent_frame(const ConstraintSystem& sys, const Vector& x);

/// Solves c(base + shift + J(base)^T a) = 0 for a with Newton's method.
/// Non-convergence is an ordinary outcome and yields std::nullopt.
std::optional<Vector> project_to_manifold(const ConstraintSystem& sys, const Vector& base,
                                          const Vector& shift, const NewtonConfig& cfg);

/// Same, with the Jacobian at base already available.
std::optional<Vector> project_to_manifold(const ConstraintSystem& sys, const Vector& base,
                                          const Vector& shift, const Matrix& base_jacobian,
                                          const NewtonConfig& cfg);

TangentNormalSplit split_tangent_normal(const TangentFrame& frame, const Vector& w);

/// ||c(x)||_inf
double constraint_violation(const ConstraintSystem& sys, const Vector& x);

}  // namespace smcmc
