#pragma once

#include <vector>

#include "smcmc/common.hpp"
#include "smcmc/models.hpp"
#include "smcmc/particle_cloud.hpp"
#include "smcmc/rng.hpp"

namespace smcmc {

/// y = A x + sqrt(delta) e with e ~ N(0, I); delta = 0 is the degenerate case.
struct LinearObservation {
  Matrix matrix;
  Vector y;
  double delta = 0.0;

  void validate() const;
};

/// Affine map u(z) = particular_solution + basis * z onto {A x = y} (or its noisy extension).
struct KernelParametrization {
  Vector particular_solution;
  Matrix basis;  // orthonormal columns spanning the kernel
  int dim_x = 0;
  int dim_y = 0;
  double delta = 0.0;

  Vector map(const Vector& z) const { return particular_solution + basis * z; }
  /// First d_x entries of u(z).
  Vector state_part(const Vector& z) const;
  /// Last d_y entries of u(z); only meaningful for delta > 0.
  Vector noise_part(const Vector& z) const;
  int coordinate_dim() const { return static_cast<int>(basis.cols()); }
};

/// Minimum-norm particular solution; kernel basis from a full QR with nonnegative R diagonal.
/// For delta > 0 the basis is rotated onto blockdiag(V*, I) by orthogonal Procrustes.
KernelParametrization build_parametrization(const LinearObservation& obs);

/// blockdiag(V*, I_{d_y}) for the degenerate basis V*.
Matrix limit_basis(const KernelParametrization& degenerate);

/// basis * R with R orthogonal minimizing ||basis * R - target||_F.
Matrix procrustes_align(const Matrix& basis, const Matrix& target);

/// Log target of the low-noise chain in coordinates z~ (length d_x), up to a constant:
/// log p_N(u(z~, e)) + log (1/N) sum_i f(prev_i, u(z~, x)).
double low_noise_log_target(const Vector& ztilde, const KernelParametrization& par,
                            const StateMatrix& previous, const ModelSpec& model, int time_index);

/// Log target of the degenerate chain in coordinates z (length d_x - d_y).
double degenerate_log_target(const Vector& z, const KernelParametrization& par,
                             const StateMatrix& previous, const ModelSpec& model, int time_index);

struct LinearStep {
  Vector coordinates;
  bool accepted = false;
  double log_ratio = kNegInf;
};

/// Gaussian random-walk Metropolis step of the low-noise kernel (delta > 0).
LinearStep low_noise_step(const Vector& ztilde, const StateMatrix& previous,
                          const ModelSpec& model, int time_index,
                          const KernelParametrization& par, double proposal_scale,
                          RandomStream& rng);

/// Gaussian random-walk Metropolis step of the degenerate kernel.
LinearStep degenerate_step(const Vector& z, const StateMatrix& previous, const ModelSpec& model,
                           int time_index, const KernelParametrization& par,
                           double proposal_scale, RandomStream& rng);

/// Fixed-argument comparison of the low-noise acceptance probability with its limit.
struct ProbeInput {
  ModelSpec model;
  int time_index = 1;
  Matrix matrix;            // A, shared by both times
  Vector previous_y;        // unused at time 1
  Vector current_y;
  StateMatrix previous_ztilde;  // N x d_x previous particles in z~ coordinates (time >= 2)
  Vector ztilde;
  Vector ztilde_proposed;
};

struct ProbeRow {
  double delta = 0.0;
  double acceptance_delta = 0.0;
  double acceptance_limit = 0.0;
  double gap = 0.0;
  double basis_distance = 0.0;  // ||V^delta R - blockdiag(V*, I)||_F after alignment
};

std::vector<double> default_delta_grid();

std::vector<ProbeRow> convergence_probe(const ProbeInput& input, const std::vector<double>& grid);

/// Limit acceptance probability with the factorized proposal q~ = q * p_N, compared with
/// the degenerate kernel's acceptance at the same z, z'.
struct FactorizedCheck {
  double limit_acceptance = 0.0;
  double degenerate_acceptance = 0.0;
  double difference = 0.0;
};

FactorizedCheck factorized_limit_check(const ProbeInput& input, double proposal_scale);

}  // namespace smcmc
