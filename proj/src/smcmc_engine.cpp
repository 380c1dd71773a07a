#include "smcmc/smcmc_engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "smcmc/diagnostics.hpp"

namespace smcmc {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

bool IndexSet::contains(int j) const {
  return std::find(indices.begin(), indices.end(), j) != indices.end();
}

void IndexSet::validate(int n_particles) const {
  require(!indices.empty(), "IndexSet: must not be empty");
  require(size() <= n_particles, "IndexSet: more indices than particles");
  std::vector<int> sorted = indices;
  std::sort(sorted.begin(), sorted.end());
  require(sorted.front() >= 0 && sorted.back() < n_particles, "IndexSet: index out of range");
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
          "IndexSet: indices must be distinct");
}

IndexSet IndexSet::leading(int s) {
  IndexSet out;
  out.indices.resize(s);
  for (int i = 0; i < s; ++i) out.indices[i] = i;
  return out;
}

void SmcmcConfig::validate() const {
  require(n_particles >= 1, "SmcmcConfig: n_particles must be positive");
  require(subset_size >= 1 && subset_size <= n_particles,
          "SmcmcConfig: subset_size must lie in [1, n_particles]");
  require(index_moves_per_sweep >= 1, "SmcmcConfig: index_moves_per_sweep must be positive");
  kernel.validate();
  if (adapt_rho) {
    require(adaptation.pilot_steps >= 500, "SmcmcConfig: pilot budget must be at least 500 steps");
    require(adaptation.window > 0, "SmcmcConfig: adaptation window must be positive");
  }
}

TransitionTerms::TransitionTerms(const ModelSpec& model, int time_index,
                                 const StateMatrix& previous)
    : model_(&model), time_index_(time_index), n_(static_cast<int>(previous.rows())),
      previous_(previous) {
  require(n_ > 0, "TransitionTerms: previous cloud is empty");
  require(previous.cols() == model.dim_x, "TransitionTerms: previous cloud has wrong width");
  const int d = model.dim_x;
  if (!model.gaussian) {
    mode_ = Mode::kGeneric;
    return;
  }
  const GaussianTransition& g = *model.gaussian;
  if (g.constant_factor) {
    mode_ = Mode::kConstantGaussian;
    shared_factor_ = *g.constant_factor;
    shared_log_norm_ = -shared_factor_.diagonal().array().log().sum() - 0.5 * d * kLogTwoPi;
    whitened_means_.resize(n_, d);
    const auto lower = shared_factor_.triangularView<Eigen::Lower>();
    for (int j = 0; j < n_; ++j) {
      const Vector mean = g.mean(previous.row(j).transpose());
      whitened_means_.row(j) = lower.solve(mean).transpose();
    }
    return;
  }
  mode_ = Mode::kStateGaussian;
  means_.reserve(n_);
  factors_.reserve(n_);
  log_norms_.reserve(n_);
  for (int j = 0; j < n_; ++j) {
    const Vector prev = previous.row(j).transpose();
    means_.push_back(g.mean(prev));
    factors_.push_back(g.covariance_factor(prev));
    log_norms_.push_back(-factors_.back().diagonal().array().log().sum() - 0.5 * d * kLogTwoPi);
  }
}

TransitionTerms::Prepared TransitionTerms::prepare(const Vector& x) const {
  Prepared out{x, {}};
  if (mode_ == Mode::kConstantGaussian) {
    out.whitened = shared_factor_.triangularView<Eigen::Lower>().solve(x);
  }
  return out;
}

double TransitionTerms::log_term(int j, const Prepared& x) const {
  switch (mode_) {
    case Mode::kConstantGaussian:
      return shared_log_norm_ - 0.5 * (x.whitened - whitened_means_.row(j).transpose()).squaredNorm();
    case Mode::kStateGaussian: {
      const Vector white =
          factors_[j].triangularView<Eigen::Lower>().solve(x.point - means_[j]);
      return log_norms_[j] - 0.5 * white.squaredNorm();
    }
    case Mode::kGeneric:
      break;
  }
  return model_->transition_logpdf(time_index_, previous_.row(j).transpose(), x.point);
}

namespace {

void fill_terms(std::vector<double>& out, const IndexSet& idx, const TransitionTerms& terms,
                const Vector& x) {
  const auto prepared = terms.prepare(x);
  out.resize(idx.indices.size());
  for (std::size_t i = 0; i < idx.indices.size(); ++i) {
    out[i] = terms.log_term(idx.indices[i], prepared);
  }
}

}  // namespace

double aux_target_log_density(const Vector& x, const IndexSet& idx, const TransitionTerms& terms,
                              const ConstraintSystem& sys) {
  std::vector<double> values;
  fill_terms(values, idx, terms, x);
  return log_gram_weight(sys, x) + log_sum_exp(values);
}

double aux_target_log_density(const Vector& x, const IndexSet& idx, const ParticleCloud& prev,
                              const ModelSpec& model, const ConstraintSystem& sys) {
  idx.validate(prev.size());
  const TransitionTerms terms(model, prev.time_index + 1, prev.states);
  return aux_target_log_density(x, idx, terms, sys);
}

AuxState make_aux_state(Vector x, IndexSet idx, const TransitionTerms& terms,
                        const ConstraintSystem& sys) {
  idx.validate(terms.size());
  AuxState state{std::move(x), std::move(idx), {}, 0.0, kNegInf};
  fill_terms(state.log_terms, state.idx, terms, state.x);
  state.log_gram = log_gram_weight(sys, state.x);
  state.log_target = state.log_gram + log_sum_exp(state.log_terms);
  return state;
}

IndexMoveStats index_mh_step(AuxState& state, const TransitionTerms& terms,
                             const ConstraintSystem& sys, int n_moves, bool use_cache,
                             RandomStream& rng) {
  IndexMoveStats stats;
  const int n = terms.size();
  const int s = state.idx.size();
  if (s >= n) return stats;
  std::vector<double> proposed_terms;
  for (int m = 0; m < n_moves; ++m) {
    if (!use_cache) {
      fill_terms(state.log_terms, state.idx, terms, state.x);
      state.log_gram = log_gram_weight(sys, state.x);
    }
    const int position = rng.uniform_index(s);
    int candidate = rng.uniform_index(n);
    while (state.idx.contains(candidate)) candidate = rng.uniform_index(n);
    const double log_u = std::log(rng.uniform());

    proposed_terms = state.log_terms;
    proposed_terms[position] = terms.log_term(candidate, state.x);
    const double old_sum = log_sum_exp(state.log_terms);
    const double new_sum = log_sum_exp(proposed_terms);
    const double log_ratio = new_sum - old_sum;
    ++stats.proposed;
    if (std::isnan(log_ratio) || !(log_u < log_ratio)) continue;
    ++stats.accepted;
    state.idx.indices[position] = candidate;
    state.log_terms.swap(proposed_terms);
    state.log_target = state.log_gram + new_sum;
  }
  return stats;
}

KernelStepRecord composed_kernel_step(AuxState& state, const TransitionTerms& terms,
                                      const ConstraintSystem& sys, const SmcmcConfig& cfg,
                                      RandomStream& rng) {
  std::vector<double> scratch;
  double scratch_gram = 0.0;
  auto target = [&](const Vector& y) {
    fill_terms(scratch, state.idx, terms, y);
    scratch_gram = log_gram_weight(sys, y);
    return scratch_gram + log_sum_exp(scratch);
  };
  if (!cfg.cache_transition_terms) {
    state.log_target = target(state.x);
    state.log_terms = scratch;
    state.log_gram = scratch_gram;
  }
  KernelStep step = kernel_step(target, sys, state.x, state.log_target, cfg.kernel, rng);
  if (step.record.accepted) {
    state.x = std::move(step.state);
    state.log_target = step.log_target;
    state.log_terms.swap(scratch);
    state.log_gram = scratch_gram;
  }
  index_mh_step(state, terms, sys, cfg.index_moves_per_sweep, cfg.cache_transition_terms, rng);
  return step.record;
}

Vector init_state(const ConstraintSystem& sys, const Vector& seed_point, double state_scale,
                  const NewtonConfig& newton, RandomStream& rng) {
  require(seed_point.size() == sys.dim_x(), "init_state: seed has wrong length");
  const Vector zero = Vector::Zero(sys.dim_x());
  auto attempt = [&](const Vector& seed) -> std::optional<Vector> {
    try {
      return project_to_manifold(sys, seed, zero, newton);
    } catch (const SingularJacobianError&) {
      return std::nullopt;
    }
  };
  if (auto x = attempt(seed_point)) return *x;
  constexpr double kLadder[] = {0.1, 1.0, 10.0};
  constexpr int kAttemptsPerRung = 10;
  for (double rung : kLadder) {
    for (int i = 0; i < kAttemptsPerRung; ++i) {
      const Vector seed = seed_point + rung * state_scale * rng.normal_vector(sys.dim_x());
      if (auto x = attempt(seed)) return *x;
    }
  }
  throw InitializationError("init_state: Newton projection failed from seed " +
                            describe_point(seed_point) + " (|c|_inf = " +
                            std::to_string(constraint_violation(sys, seed_point)) +
                            ") after the full restart ladder");
}

FilterRun run_filter(const ModelSpec& model, const StateMatrix& observations,
                     const SmcmcConfig& cfg, std::uint64_t seed,
                     const std::function<void(const ParticleCloud&)>& on_step) {
  cfg.validate();
  require(observations.rows() >= 1, "run_filter: need at least one observation");
  require(observations.cols() == model.dim_y, "run_filter: observation width does not match model");
  const auto run_start = std::chrono::steady_clock::now();

  FilterRun run;
  run.seed = seed;
  StateMatrix previous = model.initial_state.transpose();
  Vector seed_point = model.initial_state;
  ScaleAdapter adapter(cfg.kernel.rho, cfg.kernel.target_acceptance, cfg.adaptation.window,
                       cfg.adaptation.decay);
  const int burn_in = cfg.resolved_burn_in();

  for (int k = 1; k <= observations.rows(); ++k) {
    const auto step_start = std::chrono::steady_clock::now();
    const auto k32 = static_cast<std::uint32_t>(k);
    const ConstraintSystem sys = model.constraint(observations.row(k - 1).transpose());
    const TransitionTerms terms(model, k, previous);
    const int s = std::min(cfg.subset_size, terms.size());

    RandomStream init_rng(seed, k32, StreamPurpose::kInitialization);
    Vector x0 = init_state(sys, seed_point, model.state_scale, cfg.kernel.newton, init_rng);
    AuxState state = make_aux_state(std::move(x0), IndexSet::leading(s), terms, sys);
    if (!std::isfinite(state.log_target)) {
      throw InitializationError("run_filter: initial state has zero target density at step " +
                                std::to_string(k) + ": " + describe_point(state.x));
    }

    RandomStream rng(seed, k32, StreamPurpose::kChain);
    SmcmcConfig step_cfg = cfg;
    if (cfg.adapt_rho) {
      for (int i = 0; i < cfg.adaptation.pilot_steps; ++i) {
        step_cfg.kernel.rho = adapter.rho();
        adapter.record(composed_kernel_step(state, terms, sys, step_cfg, rng).accepted);
      }
      step_cfg.kernel.rho = adapter.rho();
    }
    for (int i = 0; i < burn_in; ++i) composed_kernel_step(state, terms, sys, step_cfg, rng);

    ParticleCloud cloud;
    cloud.time_index = k;
    cloud.rho = step_cfg.kernel.rho;
    cloud.states.resize(cfg.n_particles, model.dim_x);
    for (int i = 0; i < cfg.n_particles; ++i) {
      const KernelStepRecord record = composed_kernel_step(state, terms, sys, step_cfg, rng);
      cloud.tally.record(record.rejection_reason);
      cloud.states.row(i) = state.x.transpose();
    }
    cloud.acceptance_rate = cloud.tally.acceptance_rate();
    summarize_ess(cloud);
    cloud.wall_time = cfg.record_timing ? seconds_since(step_start) : 0.0;

    seed_point = state.x;
    previous = cloud.states;
    if (on_step) on_step(cloud);
    if (!cfg.keep_states) cloud.states.resize(0, model.dim_x);
    run.clouds.push_back(std::move(cloud));
  }
  run.total_wall_time = cfg.record_timing ? seconds_since(run_start) : 0.0;
  return run;
}

double estimate(const ParticleCloud& cloud, const std::function<double(const Vector&)>& phi) {
  require(cloud.size() > 0, "estimate: cloud is empty");
  double total = 0.0;
  for (int i = 0; i < cloud.size(); ++i) total += phi(cloud.particle(i));
  return total / cloud.size();
}

}  // namespace smcmc
