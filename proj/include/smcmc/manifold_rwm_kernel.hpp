#pragma once

#include <functional>

#include "smcmc/constraint_manifold.hpp"
#include "smcmc/particle_cloud.hpp"
#include "smcmc/rng.hpp"

namespace smcmc {

/// Unnormalized log density w.r.t. the Riemannian measure of the manifold
/// (i.e. it already contains the log Gram weight).
using LogDensity = std::function<double(const Vector&)>;

struct KernelConfig {
  double rho = 0.05;
  NewtonConfig newton;
  double target_acceptance = 0.234;
  double reverse_tolerance = 1e-8;  // ||x_recovered - x||_inf

  void validate() const;
};

struct KernelStepRecord {
  bool accepted = false;
  RejectionReason rejection_reason = RejectionReason::kNone;
  double log_ratio = kNegInf;
};

struct KernelStep {
  Vector state;
  double log_target = kNegInf;  // target at the returned state
  KernelStepRecord record;
};

/// One reversible constrained random-walk Metropolis move.
///
/// Stages: tangent frame at x, Gaussian tangent proposal v = rho U_x^T Z,
/// Newton projection along the normals at x, reverse split of x - y at y,
/// reverse projection check, Metropolis-Hastings test. The proposal density
/// is evaluated in tangent coordinates, so log q(v|x) = -|Z|^2/2 + const.
KernelStep kernel_step(const LogDensity& target, const ConstraintSystem& sys, const Vector& x,
                       const KernelConfig& cfg, RandomStream& rng);

/// As above with log target(x) supplied by the caller.
KernelStep kernel_step(const LogDensity& target, const ConstraintSystem& sys, const Vector& x,
                       double log_target_x, const KernelConfig& cfg, RandomStream& rng);

/// The full Metropolis-Hastings log ratio of moving x -> y (both on the manifold),
/// assuming y is reachable through a tangent move from x.
double transition_log_ratio(const LogDensity& target, const ConstraintSystem& sys,
                            const Vector& x, const Vector& y, double rho);

struct ChainRun {
  ParticleCloud cloud;
  double acceptance_rate = 0.0;
};

/// Runs n_steps kernel steps from x0 and keeps every state.
ChainRun run_chain(const LogDensity& target, const ConstraintSystem& sys, const Vector& x0,
                   int n_steps, const KernelConfig& cfg, RandomStream& rng);

struct AdaptationConfig {
  int pilot_steps = 2000;
  int window = 100;
  double decay = 0.6;  // gain t^{-decay} for window t
};

/// Robbins-Monro tuning of log rho towards a target acceptance rate,
/// updated once per window of steps.
class ScaleAdapter {
 public:
  ScaleAdapter(double rho, double target_acceptance, int window, double decay);

  void record(bool accepted);
  double rho() const { return std::exp(log_rho_); }
  int windows_completed() const { return windows_; }

 private:
  double log_rho_;
  double target_;
  int window_;
  double decay_;
  int in_window_ = 0;
  int accepted_in_window_ = 0;
  int windows_ = 0;
};

/// Pilot run that adapts rho; the returned value is meant to be frozen for sampling.
double adapt_rho(const KernelConfig& cfg, const LogDensity& pilot_target,
                 const ConstraintSystem& sys, const Vector& x0, RandomStream& rng,
                 const AdaptationConfig& adaptation = {});

}  // namespace smcmc
