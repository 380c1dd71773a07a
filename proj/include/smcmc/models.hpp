#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "smcmc/common.hpp"
#include "smcmc/constraint_manifold.hpp"
#include "smcmc/rng.hpp"

namespace smcmc {

/// Gaussian transition N(mean(x_prev), L L^T) with L lower triangular.
struct GaussianTransition {
  std::function<Vector(const Vector&)> mean;
  /// Lower Cholesky factor of the covariance at x_prev.
  std::function<Matrix(const Vector&)> covariance_factor;
  /// Set when the covariance does not depend on x_prev; then this is the factor.
  std::optional<Matrix> constant_factor;
};

/// X_k = B X_{k-1} + noise_factor * nu, nu ~ N(0, I).
struct LinearDynamics {
  Matrix transition;
  Matrix noise_factor;
};

struct ModelSpec {
  std::string name;
  int dim_x = 0;
  int dim_y = 0;
  std::function<double(int, const Vector&, const Vector&)> transition_logpdf;
  std::function<Vector(int, const Vector&, RandomStream&)> simulate_step;
  ObservationMap observe;
  Vector initial_state;
  double state_scale = 1.0;  // typical coordinate magnitude, sizes init perturbations

  std::optional<GaussianTransition> gaussian;
  std::optional<LinearDynamics> linear_dynamics;
  std::optional<Matrix> observation_matrix;  // h(x) = A x
  /// Maps sampler coordinates to physical coordinates (x = P v); unset means identity.
  std::optional<Matrix> physical_map;

  ConstraintSystem constraint(const Vector& y) const;
  Vector to_physical(const Vector& v) const;
};

struct Trajectory {
  StateMatrix states;        // (n + 1) x d_x, row 0 is x0
  StateMatrix observations;  // n x d_y, row k-1 holds y_k
  int length() const { return static_cast<int>(observations.rows()); }
};

/// Draws X_1..X_n and noiseless Y_k = h(X_k); step k uses its own simulation stream.
Trajectory simulate(const ModelSpec& model, int n_steps, std::uint64_t seed);

ModelSpec lgm_spec(int dim_x, double sigma = 0.1);
ModelSpec sphere_spec(int dim_x, double sigma = 0.5);

struct FhnParams {
  double sigma = 0.5;
  double epsilon = 0.2;
  double gamma = 1.5;
  double beta = 0.5;
  double delta = 0.05;
};

Vector fhn_drift(const Vector& x, const FhnParams& p);
Matrix fhn_drift_jacobian(const Vector& x, const FhnParams& p);
/// Component i is tr(Hess a_i(x) B B^T).
Vector fhn_hessian_trace(const Vector& x, const FhnParams& p);
Vector fhn_mean(const Vector& x, const FhnParams& p);
/// 2 x 2 matrix with columns g1, g2 multiplying (W1, W2).
Matrix fhn_noise_columns(const Vector& x, const FhnParams& p);
ModelSpec fhn_spec(const FhnParams& params = {});

struct MaternConfig {
  double smoothness = 0.5;  // only 1/2 (exponential kernel) is supported
  double range = 10.0;
  double variance = 4.0;
  double spacing = 1.0;
};

/// Covariance on a periodic grid of n points with wrapped distances.
Matrix matern_covariance(int n, const MaternConfig& cfg);

/// Circulant central-difference stencils on a periodic grid.
Matrix circulant_first_difference(int n);
Matrix circulant_second_difference(int n);
Matrix circulant_fourth_difference(int n);

struct KsParams {
  int dim_x = 100;
  int stride = 10;
  double length = 10.0 * 3.14159265358979323846;
  double gamma = 0.01;
  MaternConfig matern;
  double observation_sd = 0.1;  // sigma_y of the preconditioner only
};

struct KsOperators {
  double ds = 0.0;
  double dt = 0.0;
  Matrix implicit;         // A
  Matrix advection;        // B
  Matrix noise;            // C = sqrt(dt) L
  Matrix observation;      // H
  Matrix implicit_inverse;
  Matrix covariance;       // A^-1 C C^T A^-T
  Matrix covariance_factor;
  Vector initial_state;
};

KsOperators ks_operators(const KsParams& params);
Vector ks_mean(const KsOperators& ops, const Vector& x_prev);
ModelSpec ks_spec(const KsParams& params = {});

/// (Q^-1 + H^T R^-1 H)^-1 with Q the transition covariance and R = sigma_y^2 I.
Matrix ks_preconditioner_covariance(const KsOperators& ops, double observation_sd);

/// Model for v = P^-1 x with P lower triangular; requires a Gaussian transition.
ModelSpec precondition(const ModelSpec& model, const Matrix& factor);

/// True when the observation map is a fixed matrix.
bool is_linear_observation(const ModelSpec& model);

}  // namespace smcmc
