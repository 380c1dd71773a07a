#include <boost/numeric/odeint.hpp>
#include <fmt/format.h>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "smcmc/cli_harness.hpp"
#include "smcmc/diagnostics.hpp"
#include "smcmc/oracles.hpp"
#include "smcmc/stat_tests.hpp"

using namespace smcmc;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigDir = SMCMC_CONFIG_DIR;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Tolerances, one block per criterion.
constexpr int kKalmanCoordinate = 1;  // X_{k,2}
constexpr double kKalmanMeanSigmas = 4.0;
constexpr double kKalmanStdRelative = 0.25;

constexpr double kAcceptanceLow = 0.18;
constexpr double kAcceptanceHigh = 0.29;
constexpr double kEssLow = 50.0;
constexpr double kEssHigh = 400.0;

constexpr std::array<int, 4> kSphereCoordinates{0, 25, 50, 75};  // X_{1,1}, X_{1,26}, X_{1,51}, X_{1,76}
constexpr int kSphereSamples = 500;
constexpr double kSphereLevel = 0.01;

constexpr double kProbeFinalGap = 1e-6;
constexpr double kFactorizedTolerance = 1e-12;

constexpr int kMarginalPoints = 20;
constexpr double kMarginalTolerance = 1e-12;

constexpr int kStationaryChains = 1000;
constexpr int kStationarySteps = 10;
constexpr double kStationaryRho = 0.7;
constexpr double kManifoldTolerance = 1e-10;

constexpr double kFhnOdeFactor = 10.0;  // times delta^2
constexpr int kFhnDraws = 1000000;
constexpr double kFhnSigmas = 4.0;
constexpr double kFhnAcceptanceLow = 0.15;
constexpr double kFhnAcceptanceHigh = 0.30;

constexpr double kFftTolerance = 1e-10;
constexpr double kKsNormBound = 12.0;
constexpr int kKsSeeds = 10;

constexpr std::array<int, 4> kSweepSizes{1, 10, 20, 50};
constexpr int kSweepReplicates = 10;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) out[fs::relative(entry.path(), dir).string()] = slurp(entry.path());
  }
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("smcmc_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunConfig preset(const std::string& name, bool smoke) {
  return load_run_config(kConfigDir / (name + ".json"), smoke);
}

/// Full LGM preset run shared by criteria 1 and 2.
struct LgmRun {
  FilterRun run;
  std::vector<GaussianBelief> oracle;
};

const LgmRun& lgm_run() {
  static const LgmRun cached = [] {
    const RunConfig cfg = preset("lgm", false);
    const ModelSpec model = build_model(cfg.model);
    const Trajectory traj = simulate(model, cfg.n_steps, *cfg.seed);
    LgmRun out;
    out.run = run_filter(model, traj.observations, build_smcmc_config(cfg.smcmc), *cfg.seed);
    out.oracle = kalman_filter_degenerate(model, traj.observations);
    return out;
  }();
  return cached;
}

Verdict kalman_agreement() {
  const LgmRun& lgm = lgm_run();
  bool pass = true;
  double worst_mean = 0.0, worst_std = 0.0;
  for (const ParticleCloud& cloud : lgm.run.clouds) {
    const GaussianBelief& truth = lgm.oracle[cloud.time_index - 1];
    const double sd = std::sqrt(truth.covariance(kKalmanCoordinate, kKalmanCoordinate));
    const Vector mean = cloud_mean(cloud.states);
    const Vector stddev = cloud_std(cloud.states);
    const double coordinate_ess = cloud.ess_per_coordinate[kKalmanCoordinate];
    const double mean_score =
        std::abs(mean[kKalmanCoordinate] - truth.mean[kKalmanCoordinate]) / (sd / std::sqrt(coordinate_ess));
    const double std_rel = std::abs(stddev[kKalmanCoordinate] / sd - 1.0);
    worst_mean = std::max(worst_mean, mean_score);
    worst_std = std::max(worst_std, std_rel);
    if (mean_score > kKalmanMeanSigmas || std_rel > kKalmanStdRelative) pass = false;
  }
  return {pass, fmt::format("max |mean err|/(sd/sqrt(ESS)) = {:.3f} (<= {}), max std rel err = {:.4f} (<= {})",
                            worst_mean, kKalmanMeanSigmas, worst_std, kKalmanStdRelative)};
}

Verdict acceptance_tuning() {
  const LgmRun& lgm = lgm_run();
  double acc_lo = 1.0, acc_hi = 0.0, ess_lo = kInf, ess_hi = 0.0;
  for (const ParticleCloud& cloud : lgm.run.clouds) {
    acc_lo = std::min(acc_lo, cloud.acceptance_rate);
    acc_hi = std::max(acc_hi, cloud.acceptance_rate);
    ess_lo = std::min(ess_lo, cloud.ess);
    ess_hi = std::max(ess_hi, cloud.ess);
  }
  const bool pass = acc_lo >= kAcceptanceLow && acc_hi <= kAcceptanceHigh && ess_lo >= kEssLow &&
                    ess_hi <= kEssHigh;
  return {pass, fmt::format("acceptance in [{:.4f}, {:.4f}] (need [{}, {}]), ESS in [{:.1f}, {:.1f}] (need [{}, {}])",
                            acc_lo, acc_hi, kAcceptanceLow, kAcceptanceHigh, ess_lo, ess_hi, kEssLow,
                            kEssHigh)};
}

Verdict sphere_uniformity() {
  RunConfig cfg = preset("sphere", false);
  cfg.n_steps = 1;
  const ModelSpec model = build_model(cfg.model);
  const Trajectory traj = simulate(model, 1, *cfg.seed);
  const double radius = std::sqrt(traj.observations(0, 0));
  SmcmcConfig smcmc = build_smcmc_config(cfg.smcmc);

  // Grow the chain until the ESS-thinned sample holds enough effectively independent states.
  ParticleCloud cloud;
  int stride = 1;
  for (int attempt = 0; attempt < 4; ++attempt) {
    cloud = run_filter(model, traj.observations, smcmc, *cfg.seed).clouds.front();
    double ess_min = kInf;
    for (int c : kSphereCoordinates) ess_min = std::min(ess_min, cloud.ess_per_coordinate[c]);
    stride = static_cast<int>(std::ceil(cloud.size() / ess_min));
    if (cloud.size() / stride >= kSphereSamples) break;
    smcmc.n_particles = static_cast<int>(1.25 * kSphereSamples * stride);
  }
  if (cloud.size() / stride < kSphereSamples) {
    return {false, fmt::format("chain of {} states thins to fewer than {} samples", cloud.size(), kSphereSamples)};
  }
  bool pass = true;
  std::string detail = fmt::format("N = {}, stride = {}, p-values:", cloud.size(), stride);
  for (int c : kSphereCoordinates) {
    std::vector<double> samples;
    for (int i = 0; i < kSphereSamples; ++i) samples.push_back(cloud.states(i * stride, c));
    const GoodnessOfFit fit = ks_one_sample(samples, [&](double t) {
      return sphere_coordinate_marginal_cdf(model.dim_x, radius, t);
    });
    detail += fmt::format(" x{}={:.3f}", c + 1, fit.p_value);
    if (fit.p_value < kSphereLevel) pass = false;
  }
  return {pass, detail + fmt::format(" (level {})", kSphereLevel)};
}

Verdict convergence_probe_check() {
  const RunConfig cfg = preset("lgm", false);
  const ProbeInput input = make_probe_input(cfg, *cfg.seed);
  const std::vector<ProbeRow> rows = convergence_probe(input, default_delta_grid());
  bool decreasing = true;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].gap > rows[i - 1].gap) decreasing = false;
  }
  const double final_gap = rows.back().gap;
  const FactorizedCheck factorized = factorized_limit_check(input, cfg.probe.proposal_scale);
  const bool pass = decreasing && final_gap < kProbeFinalGap &&
                    std::abs(factorized.difference) <= kFactorizedTolerance;
  return {pass, fmt::format("gap at delta={:g} is {:.3e} (need < {:g}), decreasing = {}, factorized difference = {:.1e} (<= {:g})",
                            rows.back().delta, final_gap, kProbeFinalGap, decreasing ? "yes" : "no",
                            std::abs(factorized.difference), kFactorizedTolerance)};
}

double log_sum_exp(const std::vector<double>& values) {
  const double top = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - top);
  return top + std::log(sum);
}

Verdict marginalization_identity() {
  constexpr int kParticles = 3;
  constexpr int kSubset = 2;
  const ModelSpec model = lgm_spec(5);
  RandomStream rng(20230405, 0, StreamPurpose::kTest);
  StateMatrix previous(kParticles, model.dim_x);
  for (int i = 0; i < kParticles; ++i) previous.row(i) = rng.normal_vector(model.dim_x).transpose();
  const Vector y = Vector::Constant(1, 0.3);
  const ConstraintSystem sys = model.constraint(y);
  const TransitionTerms terms(model, 2, previous);

  std::vector<IndexSet> ordered_sets;
  for (int a = 0; a < kParticles; ++a) {
    for (int b = 0; b < kParticles; ++b) {
      if (a != b) ordered_sets.push_back(IndexSet{{a, b}});
    }
  }
  double reference = kNaN, worst = 0.0;
  for (int p = 0; p < kMarginalPoints; ++p) {
    Vector x = rng.normal_vector(model.dim_x);
    x[0] = y[0];
    std::vector<double> enumerated;
    for (const IndexSet& idx : ordered_sets) enumerated.push_back(aux_target_log_density(x, idx, terms, sys));
    std::vector<double> full;
    for (int j = 0; j < kParticles; ++j) {
      full.push_back(model.transition_logpdf(2, previous.row(j).transpose(), x));
    }
    const double log_ratio = log_sum_exp(enumerated) - (log_gram_weight(sys, x) + log_sum_exp(full));
    if (p == 0) reference = log_ratio;
    worst = std::max(worst, std::abs(std::expm1(log_ratio - reference)));
  }
  const bool pass = worst <= kMarginalTolerance;
  return {pass, fmt::format("N={}, s={}: ratio {:.12f} at the first point, max relative spread over {} points "
                            "= {:.2e} (<= {:g})",
                            kParticles, kSubset, std::exp(reference), kMarginalPoints, worst, kMarginalTolerance)};
}

ConstraintSystem unit_sphere(int d) {
  ObservationMap h{[](const Vector& x) { return Vector::Constant(1, x.squaredNorm()); },
                   [](const Vector& x) { return Matrix(2.0 * x.transpose()); }};
  return ConstraintSystem(d, Vector::Constant(1, 1.0), h);
}

Vector uniform_on_unit_sphere(int d, RandomStream& rng) {
  const Vector x = rng.normal_vector(d);
  return x / x.norm();
}

Verdict kernel_stationarity() {
  const LogDensity uniform = [](const Vector&) { return 0.0; };
  KernelConfig cfg;
  cfg.rho = kStationaryRho;
  bool pass = true;
  double worst_violation = 0.0;
  std::string detail;
  for (int d : {2, 3}) {
    const ConstraintSystem sys = unit_sphere(d);
    RandomStream init(20230406, static_cast<std::uint32_t>(d), StreamPurpose::kTest);
    RandomStream reference(20230407, static_cast<std::uint32_t>(d), StreamPurpose::kTest);
    RandomStream chain(20230408, static_cast<std::uint32_t>(d), StreamPurpose::kTest);
    std::vector<double> moved, fresh;
    for (int c = 0; c < kStationaryChains; ++c) {
      Vector x = uniform_on_unit_sphere(d, init);
      for (int t = 0; t < kStationarySteps; ++t) {
        x = kernel_step(uniform, sys, x, cfg, chain).state;
        worst_violation = std::max(worst_violation, constraint_violation(sys, x));
      }
      moved.push_back(x[0]);
      fresh.push_back(uniform_on_unit_sphere(d, reference)[0]);
    }
    const CvmResult cvm = cvm_two_sample(moved, fresh);
    if (cvm.rejects_at_01()) pass = false;
    detail += fmt::format("d={}: CvM T={:.3f} (critical {}); ", d, cvm.statistic, CvmResult::kCritical01);
  }
  if (worst_violation > kManifoldTolerance) pass = false;
  return {pass, detail + fmt::format("max |c|_inf = {:.1e} (<= {:g})", worst_violation, kManifoldTolerance)};
}

Verdict fhn_fidelity() {
  namespace odeint = boost::numeric::odeint;
  using State = std::array<double, 2>;
  const RunConfig cfg = preset("fhn", false);
  const FhnParams p = cfg.model.fhn;
  const ModelSpec model = build_model(cfg.model);

  // Zero-noise propagation against an adaptive ODE solve from states the model visits.
  const Trajectory path = simulate(model, cfg.n_steps, *cfg.seed);
  double worst_ode = 0.0;
  for (Eigen::Index i = 0; i < path.states.rows(); ++i) {
    const Vector x0 = path.states.row(i).transpose();
    State s{x0[0], x0[1]};
    auto rhs = [&p](const State& x, State& dx, double) {
      Vector v(2);
      v << x[0], x[1];
      const Vector a = fhn_drift(v, p);
      dx = {a[0], a[1]};
    };
    odeint::integrate_adaptive(odeint::make_controlled<odeint::runge_kutta_dopri5<State>>(1e-12, 1e-12),
                               rhs, s, 0.0, p.delta, p.delta / 100);
    Vector exact(2);
    exact << s[0], s[1];
    worst_ode = std::max(worst_ode, (fhn_mean(x0, p) - exact).norm());
  }
  const double ode_bound = kFhnOdeFactor * p.delta * p.delta;

  // One-step covariance of simulate_step against G G^T.
  Vector prev(2);
  prev << 0.4, -0.3;
  const Matrix g = fhn_noise_columns(prev, p);
  const Matrix cov = g * g.transpose();
  const Vector centre = fhn_mean(prev, p);
  RandomStream rng(20230409, 0, StreamPurpose::kTest);
  Vector sum = Vector::Zero(2);
  Matrix outer = Matrix::Zero(2, 2);
  for (int i = 0; i < kFhnDraws; ++i) {
    const Vector x = model.simulate_step(1, prev, rng) - centre;
    sum += x;
    outer += x * x.transpose();
  }
  const Vector m = sum / kFhnDraws;
  const Matrix sample_cov = (outer - kFhnDraws * m * m.transpose()) / (kFhnDraws - 1);
  double worst_cov = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double se = std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / kFhnDraws);
      worst_cov = std::max(worst_cov, std::abs(sample_cov(i, j) - cov(i, j)) / se);
    }
  }

  // Smoke-scale filter run.
  const RunConfig smoke = preset("fhn", true);
  const ModelSpec smoke_model = build_model(smoke.model);
  const Trajectory smoke_path = simulate(smoke_model, smoke.n_steps, *smoke.seed);
  const FilterRun run =
      run_filter(smoke_model, smoke_path.observations, build_smcmc_config(smoke.smcmc), *smoke.seed);
  double acc_lo = 1.0, acc_hi = 0.0;
  for (const ParticleCloud& cloud : run.clouds) {
    acc_lo = std::min(acc_lo, cloud.acceptance_rate);
    acc_hi = std::max(acc_hi, cloud.acceptance_rate);
  }
  const bool pass = worst_ode < ode_bound && worst_cov <= kFhnSigmas && acc_lo >= kFhnAcceptanceLow &&
                    acc_hi <= kFhnAcceptanceHigh;
  return {pass, fmt::format("ODE error {:.2e} (< {:.2e}), covariance {:.2f} SE (<= {}), smoke acceptance in "
                            "[{:.4f}, {:.4f}] (need [{}, {}])",
                            worst_ode, ode_bound, worst_cov, kFhnSigmas, acc_lo, acc_hi, kFhnAcceptanceLow,
                            kFhnAcceptanceHigh)};
}

Vector circulant_apply_fft(const Matrix& circ, const Vector& x) {
  Eigen::FFT<double> fft;
  const Vector kernel = circ.col(0);
  Eigen::VectorXcd kf, xf;
  fft.fwd(kf, kernel);
  fft.fwd(xf, x);
  const Eigen::VectorXcd prod = kf.cwiseProduct(xf);
  Vector out;
  fft.inv(out, prod);
  return out;
}

Verdict ks_health() {
  const RunConfig cfg = preset("ks", false);
  const KsOperators ops = ks_operators(cfg.model.ks);
  const bool cholesky_ok = Eigen::LLT<Matrix>(ops.implicit).info() == Eigen::Success;

  RandomStream rng(20230410, 0, StreamPurpose::kTest);
  double fft_error = 0.0;
  for (const Matrix* m : {&ops.implicit, &ops.advection}) {
    for (int i = 0; i < 5; ++i) {
      const Vector x = rng.normal_vector(cfg.model.ks.dim_x);
      fft_error = std::max(fft_error, (*m * x - circulant_apply_fft(*m, x)).cwiseAbs().maxCoeff());
    }
  }

  const ModelSpec physical = ks_spec(cfg.model.ks);
  double norm_lo = kInf, norm_hi = 0.0;
  int seeds_in_range = 0;
  for (int i = 0; i < kKsSeeds; ++i) {
    const Trajectory traj = simulate(physical, cfg.n_steps, *cfg.seed + static_cast<std::uint64_t>(i));
    double lo = kInf, hi = 0.0;
    for (Eigen::Index k = 1; k < traj.states.rows(); ++k) {
      const double norm = traj.states.row(k).norm();
      lo = std::min(lo, norm);
      hi = std::max(hi, norm);
    }
    if (lo > 0.0 && hi < kKsNormBound) ++seeds_in_range;
    norm_lo = std::min(norm_lo, lo);
    norm_hi = std::max(norm_hi, hi);
  }

  const RunConfig smoke = preset("ks", true);
  const ModelSpec model = build_model(smoke.model);
  const Trajectory path = simulate(model, smoke.n_steps, *smoke.seed);
  double worst_violation = 0.0;
  int steps = 0;
  run_filter(model, path.observations, build_smcmc_config(smoke.smcmc), *smoke.seed,
             [&](const ParticleCloud& cloud) {
               const ConstraintSystem sys =
                   model.constraint(path.observations.row(cloud.time_index - 1).transpose());
               for (int i = 0; i < cloud.size(); ++i) {
                 worst_violation = std::max(worst_violation, constraint_violation(sys, cloud.particle(i)));
               }
               ++steps;
             });

  const bool pass = cholesky_ok && fft_error <= kFftTolerance && seeds_in_range == kKsSeeds &&
                    steps == smoke.n_steps && worst_violation <= kManifoldTolerance;
  return {pass, fmt::format("Cholesky {}, FFT error {:.1e} (<= {:g}), |X_k| in [{:.2f}, {:.2f}] with {}/{} seeds "
                            "inside (0, {}), smoke filter {} steps with max |c|_inf {:.1e} (<= {:g})",
                            cholesky_ok ? "ok" : "failed", fft_error, kFftTolerance, norm_lo, norm_hi,
                            seeds_in_range, kKsSeeds, kKsNormBound, steps, worst_violation,
                            kManifoldTolerance)};
}

Verdict s_trend() {
  RunConfig cfg = preset("lgm", false);
  cfg.sweep.s_values.assign(kSweepSizes.begin(), kSweepSizes.end());
  cfg.sweep.replicates = kSweepReplicates;
  const fs::path out = scratch("sweep");
  const std::vector<SweepRow> rows = cmd_sweep_s(cfg, *cfg.seed, out, 1, true);
  std::vector<SweepRow> medians;
  for (const SweepRow& r : rows) {
    if (r.replicate == -1) medians.push_back(r);
  }
  std::sort(medians.begin(), medians.end(),
            [](const SweepRow& a, const SweepRow& b) { return a.subset_size < b.subset_size; });
  bool ess_ok = true, time_ok = true;
  std::string table;
  for (std::size_t i = 0; i < medians.size(); ++i) {
    table += fmt::format(" s={}: ESS {:.1f}, L2 {:.4f}, {:.2f}s;", medians[i].subset_size, medians[i].ess_median,
                         medians[i].l2_mean_error, medians[i].total_runtime);
    if (i > 0) {
      if (medians[i].ess_median < medians[i - 1].ess_median) ess_ok = false;
      if (medians[i].total_runtime <= medians[i - 1].total_runtime) time_ok = false;
    }
  }
  auto at = [&](int s) {
    return *std::find_if(medians.begin(), medians.end(), [s](const SweepRow& r) { return r.subset_size == s; });
  };
  const bool error_ok = at(20).l2_mean_error <= at(1).l2_mean_error;
  const bool pass = medians.size() == kSweepSizes.size() && ess_ok && time_ok && error_ok;
  return {pass, fmt::format("ESS non-decreasing = {}, runtime increasing = {}, L2(s=20) <= L2(s=1) = {};{}",
                            ess_ok ? "yes" : "no", time_ok ? "yes" : "no", error_ok ? "yes" : "no", table)};
}

Verdict determinism() {
  bool pass = true;
  std::string detail;
  for (const std::string name : {"lgm", "sphere", "fhn", "ks"}) {
    for (const std::string command : {"simulate", "filter"}) {
      std::array<fs::path, 2> dirs{scratch(name + "_" + command + "_a"), scratch(name + "_" + command + "_b")};
      for (const fs::path& dir : dirs) {
        CliOptions o;
        o.command = command;
        o.config = kConfigDir / (name + ".json");
        o.out = dir;
        o.smoke = true;
        o.timing = false;
        if (run_cli(o) != kExitOk) pass = false;
      }
      if (tree(dirs[0]) != tree(dirs[1])) {
        pass = false;
        detail += fmt::format(" {} {} differs;", name, command);
      }
    }
  }
  std::array<fs::path, 2> sweeps{scratch("sweep_workers_1"), scratch("sweep_workers_3")};
  for (int i = 0; i < 2; ++i) {
    CliOptions o;
    o.command = "sweep-s";
    o.config = kConfigDir / "lgm.json";
    o.out = sweeps[i];
    o.smoke = true;
    o.timing = false;
    o.workers = i == 0 ? 1 : 3;
    if (run_cli(o) != kExitOk) pass = false;
  }
  if (tree(sweeps[0]) != tree(sweeps[1])) {
    pass = false;
    detail += " sweep differs across worker counts;";
  }
  return {pass, "smoke simulate/filter on 4 presets rerun byte-identical, sweep with 1 vs 3 workers identical" +
                    (detail.empty() ? std::string{} : ":" + detail)};
}

struct Criterion {
  int number;
  const char* name;
  std::function<Verdict()> check;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "Kalman agreement", kalman_agreement},
      {2, "acceptance-rate tuning", acceptance_tuning},
      {3, "sphere uniformity", sphere_uniformity},
      {4, "low-noise convergence probe", convergence_probe_check},
      {5, "marginalization identity", marginalization_identity},
      {6, "kernel stationarity", kernel_stationarity},
      {7, "FHN scheme fidelity", fhn_fidelity},
      {8, "KS model health", ks_health},
      {9, "s-study trend", s_trend},
      {10, "determinism", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.contains(c.number)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!v.pass) ++failures;
    std::cout << fmt::format("criterion {:>2} {:<28} {}  {} [{:.1f}s]", c.number, c.name,
                             v.pass ? "PASS" : "FAIL", v.detail, seconds)
              << std::endl;
  }
  std::cout << fmt::format("{} criteria failed", failures) << std::endl;
  return failures == 0 ? 0 : 1;
}
