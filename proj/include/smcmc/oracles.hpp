#pragma once

#include <vector>

#include "smcmc/common.hpp"
#include "smcmc/models.hpp"
#include "smcmc/rng.hpp"

namespace smcmc {

struct GaussianBelief {
  Vector mean;
  Matrix covariance;
};

GaussianBelief kalman_predict(const GaussianBelief& belief, const Matrix& transition,
                              const Matrix& noise_factor);

/// Predict, then condition exactly on A x = y (zero observation noise).
GaussianBelief kalman_degenerate_step(const GaussianBelief& belief, const Matrix& transition,
                                      const Matrix& noise_factor, const Matrix& observation,
                                      const Vector& y);

/// Predict, then condition on y = A x + e with e ~ N(0, R).
GaussianBelief kalman_step(const GaussianBelief& belief, const Matrix& transition,
                           const Matrix& noise_factor, const Matrix& observation, const Vector& y,
                           const Matrix& observation_covariance);

/// Degenerate Kalman filter over all observations of a linear model; entry k-1 is time k.
std::vector<GaussianBelief> kalman_filter_degenerate(const ModelSpec& model,
                                                     const StateMatrix& observations);

/// Density of one coordinate under the uniform law on the sphere of radius R in R^d.
double sphere_coordinate_marginal_pdf(int d, double radius, double t);
double sphere_coordinate_marginal_cdf(int d, double radius, double t);
Vector sample_uniform_sphere(int d, double radius, RandomStream& rng);

/// Tensor grid over the tangent coordinates z of a linear constraint.
struct GridSpec {
  Vector lower;
  Vector upper;
  int points_per_dim = 61;
};

struct GridMarginal {
  StateMatrix nodes;     // z coordinates, one row per node
  Vector probabilities;  // quadrature masses, sum to 1
  Vector mean;           // physical coordinates
  Vector stddev;
  double boundary_mass = 0.0;
  bool leaked = false;  // boundary mass above 1e-6
};

/// Brute-force filter by quadrature on the manifold parametrization (d_x - d_y <= 2).
std::vector<GridMarginal> grid_filter(const ModelSpec& model, const StateMatrix& observations,
                                      const GridSpec& grid);

}  // namespace smcmc
