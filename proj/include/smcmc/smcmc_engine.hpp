#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "smcmc/manifold_rwm_kernel.hpp"
#include "smcmc/models.hpp"
#include "smcmc/particle_cloud.hpp"

namespace smcmc {

/// Ordered subset of distinct previous-particle indices (0-based).
struct IndexSet {
  std::vector<int> indices;

  int size() const { return static_cast<int>(indices.size()); }
  bool contains(int j) const;
  void validate(int n_particles) const;
  /// The first s indices.
  static IndexSet leading(int s);
};

struct SmcmcConfig {
  int n_particles = 10000;
  int subset_size = 20;
  int burn_in = -1;  // negative selects 0.1 * n_particles
  int index_moves_per_sweep = 1;
  KernelConfig kernel;
  bool adapt_rho = false;
  AdaptationConfig adaptation;
  bool cache_transition_terms = true;
  bool record_timing = true;
  bool keep_states = true;  // false drops each cloud's states after on_step

  int resolved_burn_in() const { return burn_in < 0 ? n_particles / 10 : burn_in; }
  void validate() const;
};

/// log f_k(x_prev^j, x) for every previous particle j, with per-particle work done once.
class TransitionTerms {
 public:
  TransitionTerms(const ModelSpec& model, int time_index, const StateMatrix& previous);

  /// State-specific quantities shared by all j (whitened point for constant covariances).
  struct Prepared {
    Vector point;
    Vector whitened;
  };
  Prepared prepare(const Vector& x) const;
  double log_term(int j, const Prepared& x) const;
  double log_term(int j, const Vector& x) const { return log_term(j, prepare(x)); }

  int size() const { return n_; }

 private:
  enum class Mode { kConstantGaussian, kStateGaussian, kGeneric };
  const ModelSpec* model_;
  int time_index_;
  int n_;
  Mode mode_;
  StateMatrix previous_;
  StateMatrix whitened_means_;
  std::vector<Vector> means_;
  std::vector<Matrix> factors_;
  std::vector<double> log_norms_;
  Matrix shared_factor_;
  double shared_log_norm_ = 0.0;
};

/// log g_k(x) + log sum_{j in idx} f_k(x_prev^j, x).
double aux_target_log_density(const Vector& x, const IndexSet& idx, const TransitionTerms& terms,
                              const ConstraintSystem& sys);

/// Convenience overload that builds the transition terms from a cloud.
double aux_target_log_density(const Vector& x, const IndexSet& idx, const ParticleCloud& prev,
                              const ModelSpec& model, const ConstraintSystem& sys);

/// Chain state of the auxiliary target: x, the index set and log f_k(x_prev^j, x) for j in idx.
struct AuxState {
  Vector x;
  IndexSet idx;
  std::vector<double> log_terms;
  double log_gram = 0.0;
  double log_target = kNegInf;
};

AuxState make_aux_state(Vector x, IndexSet idx, const TransitionTerms& terms,
                        const ConstraintSystem& sys);

struct IndexMoveStats {
  int proposed = 0;
  int accepted = 0;
};

/// Single-site replacement moves on idx with x held fixed; no-op when s = N.
IndexMoveStats index_mh_step(AuxState& state, const TransitionTerms& terms,
                             const ConstraintSystem& sys, int n_moves, bool use_cache,
                             RandomStream& rng);

/// Manifold kernel on x | idx followed by index moves on idx | x'.
KernelStepRecord composed_kernel_step(AuxState& state, const TransitionTerms& terms,
                                      const ConstraintSystem& sys, const SmcmcConfig& cfg,
                                      RandomStream& rng);

/// Newton projection of a seed with a perturbation ladder on failure.
Vector init_state(const ConstraintSystem& sys, const Vector& seed_point, double state_scale,
                  const NewtonConfig& newton, RandomStream& rng);

struct FilterRun {
  std::vector<ParticleCloud> clouds;
  double total_wall_time = 0.0;
  std::uint64_t seed = 0;
};

/// Runs the filter over observations (row k-1 holds y_k).
FilterRun run_filter(const ModelSpec& model, const StateMatrix& observations,
                     const SmcmcConfig& cfg, std::uint64_t seed,
                     const std::function<void(const ParticleCloud&)>& on_step = {});

double estimate(const ParticleCloud& cloud, const std::function<double(const Vector&)>& phi);

}  // namespace smcmc
