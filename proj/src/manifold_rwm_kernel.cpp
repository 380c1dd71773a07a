#include "smcmc/manifold_rwm_kernel.hpp"

#include <chrono>

#include "smcmc/diagnostics.hpp"

namespace smcmc {

const char* to_string(RejectionReason reason) {
  switch (reason) {
    case RejectionReason::kNone: return "none";
    case RejectionReason::kProjectionFailed: return "projection_failed";
    case RejectionReason::kReverseCheckFailed: return "reverse_check_failed";
    case RejectionReason::kMetropolisRejected: return "mh_rejected";
  }
  return "unknown";
}

void RejectionTally::record(RejectionReason reason) {
  switch (reason) {
    case RejectionReason::kNone: ++accepted; break;
    case RejectionReason::kProjectionFailed: ++projection_failed; break;
    case RejectionReason::kReverseCheckFailed: ++reverse_check_failed; break;
    case RejectionReason::kMetropolisRejected: ++mh_rejected; break;
  }
}

void KernelConfig::validate() const {
  require(rho > 0.0 && std::isfinite(rho), "KernelConfig: rho must be positive");
  require(target_acceptance > 0.0 && target_acceptance < 1.0,
          "KernelConfig: target_acceptance must lie in (0, 1)");
  require(newton.tolerance > 0.0 && newton.max_iterations > 0,
          "KernelConfig: invalid Newton settings");
  require(reverse_tolerance > 0.0, "KernelConfig: reverse_tolerance must be positive");
}

KernelStep kernel_step(const LogDensity& target, const ConstraintSystem& sys, const Vector& x,
                       const KernelConfig& cfg, RandomStream& rng) {
  return kernel_step(target, sys, x, target(x), cfg, rng);
}

KernelStep kernel_step(const LogDensity& target, const ConstraintSystem& sys, const Vector& x,
                       double log_target_x, const KernelConfig& cfg, RandomStream& rng) {
  const double violation = constraint_violation(sys, x);
  if (!(violation <= cfg.newton.tolerance)) {
    throw ContractViolation("kernel_step: state is off the manifold (|c|_inf = " +
                            std::to_string(violation) + ") at " + describe_point(x));
  }

  KernelStep out{x, log_target_x, {}};
  auto reject = [&](RejectionReason reason, double log_ratio) {
    out.record = {false, reason, log_ratio};
    return out;
  };

  const TangentFrame frame_x = tangent_frame(sys, x);
  const Vector z = rng.normal_vector(sys.tangent_dim());
  const double log_u = std::log(rng.uniform());
  const Vector v = cfg.rho * (frame_x.tangent_basis.transpose() * z);

  const auto proposed = project_to_manifold(sys, x, v, frame_x.normal_basis, cfg.newton);
  if (!proposed) return reject(RejectionReason::kProjectionFailed, kNegInf);
  const Vector& y = *proposed;

  const TangentFrame frame_y = tangent_frame(sys, y);
  const Vector back_tangent = split_tangent_normal(frame_y, x - y).tangent;
  const auto recovered =
      project_to_manifold(sys, y, back_tangent, frame_y.normal_basis, cfg.newton);
  if (!recovered || (*recovered - x).cwiseAbs().maxCoeff() > cfg.reverse_tolerance) {
    return reject(RejectionReason::kReverseCheckFailed, kNegInf);
  }

  const double log_target_y = target(y);
  const Vector z_back = frame_y.tangent_basis * back_tangent / cfg.rho;
  double log_ratio = log_target_y - log_target_x - 0.5 * z_back.squaredNorm() + 0.5 * z.squaredNorm();
  if (std::isnan(log_ratio)) log_ratio = kNegInf;
  if (!(log_u < log_ratio)) return reject(RejectionReason::kMetropolisRejected, log_ratio);

  out.state = y;
  out.log_target = log_target_y;
  out.record = {true, RejectionReason::kNone, log_ratio};
  return out;
}

double transition_log_ratio(const LogDensity& target, const ConstraintSystem& sys,
                            const Vector& x, const Vector& y, double rho) {
  const TangentFrame frame_x = tangent_frame(sys, x);
  const TangentFrame frame_y = tangent_frame(sys, y);
  const Vector forward = frame_x.tangent_basis * split_tangent_normal(frame_x, y - x).tangent / rho;
  const Vector backward = frame_y.tangent_basis * split_tangent_normal(frame_y, x - y).tangent / rho;
  return target(y) - target(x) - 0.5 * backward.squaredNorm() + 0.5 * forward.squaredNorm();
}

ChainRun run_chain(const LogDensity& target, const ConstraintSystem& sys, const Vector& x0,
                   int n_steps, const KernelConfig& cfg, RandomStream& rng) {
  require(n_steps >= 0, "run_chain: n_steps must be nonnegative");
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();

  ChainRun run;
  run.cloud.states.resize(n_steps, sys.dim_x());
  run.cloud.rho = cfg.rho;
  Vector x = x0;
  double log_target = target(x);
  for (int i = 0; i < n_steps; ++i) {
    KernelStep step = kernel_step(target, sys, x, log_target, cfg, rng);
    run.cloud.tally.record(step.record.rejection_reason);
    x = std::move(step.state);
    log_target = step.log_target;
    run.cloud.states.row(i) = x.transpose();
  }
  run.acceptance_rate = run.cloud.tally.acceptance_rate();
  run.cloud.acceptance_rate = run.acceptance_rate;
  summarize_ess(run.cloud);
  run.cloud.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return run;
}

ScaleAdapter::ScaleAdapter(double rho, double target_acceptance, int window, double decay)
    : log_rho_(std::log(rho)), target_(target_acceptance), window_(window), decay_(decay) {
  require(rho > 0.0, "ScaleAdapter: rho must be positive");
  require(window > 0, "ScaleAdapter: window must be positive");
}

void ScaleAdapter::record(bool accepted) {
  ++in_window_;
  if (accepted) ++accepted_in_window_;
  if (in_window_ < window_) return;
  ++windows_;
  const double observed = static_cast<double>(accepted_in_window_) / in_window_;
  const double gain = std::pow(static_cast<double>(windows_), -decay_);
  log_rho_ += gain * (observed - target_);
  in_window_ = 0;
  accepted_in_window_ = 0;
}

double adapt_rho(const KernelConfig& cfg, const LogDensity& pilot_target,
                 const ConstraintSystem& sys, const Vector& x0, RandomStream& rng,
                 const AdaptationConfig& adaptation) {
  cfg.validate();
  require(adaptation.pilot_steps >= 500, "adapt_rho: pilot budget must be at least 500 steps");
  ScaleAdapter adapter(cfg.rho, cfg.target_acceptance, adaptation.window, adaptation.decay);
  KernelConfig running = cfg;
  Vector x = x0;
  double log_target = pilot_target(x);
  for (int i = 0; i < adaptation.pilot_steps; ++i) {
    running.rho = adapter.rho();
    KernelStep step = kernel_step(pilot_target, sys, x, log_target, running, rng);
    adapter.record(step.record.accepted);
    x = std::move(step.state);
    log_target = step.log_target;
  }
  return adapter.rho();
}

}  // namespace smcmc
