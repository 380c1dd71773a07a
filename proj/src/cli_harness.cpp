#include "smcmc/cli_harness.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <thread>

#include "smcmc/diagnostics.hpp"
#include "smcmc/oracles.hpp"

namespace smcmc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) { return fmt::format("{:.17g}", v); }

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write output file " + path.string());
  return out;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory " + dir.string());
}

std::string indexed_header(const char* first, const char* prefix, Eigen::Index n) {
  std::string out = first;
  for (Eigen::Index i = 1; i <= n; ++i) out += fmt::format(",{}{}", prefix, i);
  return out;
}

void write_indexed_rows(std::ostream& out, const StateMatrix& rows, int first_index) {
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    out << (first_index + r);
    for (Eigen::Index c = 0; c < rows.cols(); ++c) out << ',' << num(rows(r, c));
    out << '\n';
  }
}

StateMatrix to_physical(const ModelSpec& model, const StateMatrix& states) {
  if (!model.physical_map) return states;
  return states * model.physical_map->transpose();
}

void write_json(const fs::path& path, const json& doc) {
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
}

json manifest_base(const char* command, const RunConfig& cfg, std::uint64_t seed) {
  RunConfig resolved = cfg;
  resolved.seed = seed;
  return json{{"schema_version", kManifestSchemaVersion},
              {"code_version", kCodeVersion},
              {"command", command},
              {"seed", seed},
              {"config", to_json(resolved)},
              {"rng",
               {{"generator", "philox4x32-10"},
                {"counter", "(block, time_index, stream_id)"},
                {"key", "seed"},
                {"stream_ids", {{"chain", 0}, {"initialization", 1}, {"simulation", 2}, {"probe", 3}}}}},
              {"initial_index_set", "first s previous particles (0-based indices 0..s-1)"}};
}

void write_trajectory(const fs::path& out, const ModelSpec& model, const Trajectory& traj) {
  auto states = open_output(out / "trajectory.csv");
  states << indexed_header("k", "x_", model.dim_x) << '\n';
  write_indexed_rows(states, to_physical(model, traj.states), 0);
  auto obs = open_output(out / "observations.csv");
  obs << indexed_header("k", "y_", model.dim_y) << '\n';
  write_indexed_rows(obs, traj.observations, 1);
}

std::string optional_num(const std::optional<double>& v) { return v ? num(*v) : "NA"; }

}  // namespace

StateMatrix read_observations(const fs::path& path, int dim_y) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open observation file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("observation file " + path.string() + " is empty");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("observation file " + path.string() + ": bad number '" + cell + "'");
      }
    }
    if (static_cast<int>(values.size()) != dim_y + 1) {
      throw ConfigError(fmt::format("observation file {}: expected {} columns, found {}",
                                    path.string(), dim_y + 1, values.size()));
    }
    if (values[0] != static_cast<double>(rows.size() + 1)) {
      throw ConfigError("observation file " + path.string() + ": time indices must run 1, 2, ...");
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ConfigError("observation file " + path.string() + " has no rows");
  StateMatrix out(static_cast<Eigen::Index>(rows.size()), dim_y);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int c = 0; c < dim_y; ++c) out(static_cast<Eigen::Index>(r), c) = rows[r][c + 1];
  }
  return out;
}

FilterSummary filter_and_summarize(const RunConfig& cfg, const StateMatrix& observations,
                                   std::uint64_t seed, bool timing,
                                   const std::optional<fs::path>& sample_dir) {
  const ModelSpec model = build_model(cfg.model);
  SmcmcConfig smcmc = build_smcmc_config(cfg.smcmc);
  smcmc.record_timing = timing;
  smcmc.keep_states = false;

  std::vector<GaussianBelief> oracle;
  if (model.linear_dynamics && model.observation_matrix && !model.physical_map) {
    oracle = kalman_filter_degenerate(model, observations);
  }
  if (sample_dir) ensure_dir(*sample_dir);

  FilterSummary summary;
  auto on_step = [&](const ParticleCloud& cloud) {
    const StateMatrix physical = to_physical(model, cloud.states);
    StepSummary step;
    step.time_index = cloud.time_index;
    step.acceptance_rate = cloud.acceptance_rate;
    step.ess_median = cloud.ess;
    step.ess_min = cloud.ess_min;
    step.wall_time = cloud.wall_time;
    step.rho = cloud.rho;
    step.tally = cloud.tally;
    step.mean = cloud_mean(physical);
    step.stddev = cloud_std(physical);
    if (!oracle.empty()) {
      const GaussianBelief& truth = oracle[cloud.time_index - 1];
      const Vector truth_std = truth.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
      step.l2_mean_error = l2_error(step.mean, truth.mean);
      step.l2_std_error = l2_error(step.stddev, truth_std);
    }
    if (sample_dir) {
      auto out = open_output(*sample_dir / fmt::format("step_{:04d}.csv", cloud.time_index));
      std::string header;
      for (int i = 1; i <= model.dim_x; ++i) header += fmt::format("{}x_{}", i == 1 ? "" : ",", i);
      out << header << '\n';
      for (Eigen::Index r = 0; r < physical.rows(); ++r) {
        for (Eigen::Index c = 0; c < physical.cols(); ++c) {
          if (c) out << ',';
          out << num(physical(r, c));
        }
        out << '\n';
      }
    }
    summary.steps.push_back(std::move(step));
  };
  const FilterRun run = run_filter(model, observations, smcmc, seed, on_step);
  summary.total_wall_time = run.total_wall_time;

  std::vector<double> ess_values;
  double mean_err = 0.0, std_err = 0.0;
  for (const StepSummary& s : summary.steps) {
    ess_values.push_back(s.ess_median);
    if (s.l2_mean_error) mean_err += *s.l2_mean_error;
    if (s.l2_std_error) std_err += *s.l2_std_error;
  }
  summary.ess_median = median(ess_values);
  const double n = static_cast<double>(summary.steps.size());
  summary.l2_mean_error = oracle.empty() ? kNaN : mean_err / n;
  summary.l2_std_error = oracle.empty() ? kNaN : std_err / n;
  return summary;
}

Trajectory cmd_simulate(const RunConfig& cfg, std::uint64_t seed, const fs::path& out) {
  cfg.validate();
  ensure_dir(out);
  const ModelSpec model = build_model(cfg.model);
  const Trajectory traj = simulate(model, cfg.n_steps, seed);
  write_trajectory(out, model, traj);
  json manifest = manifest_base("simulate", cfg, seed);
  manifest["outputs"] = {"trajectory.csv", "observations.csv"};
  manifest["dim_x"] = model.dim_x;
  manifest["dim_y"] = model.dim_y;
  manifest["n_steps"] = cfg.n_steps;
  write_json(out / "manifest.json", manifest);
  return traj;
}

FilterSummary cmd_filter(const RunConfig& cfg, std::uint64_t seed, const fs::path& out,
                         const std::optional<fs::path>& observations, bool timing) {
  cfg.validate();
  ensure_dir(out);
  const ModelSpec model = build_model(cfg.model);
  StateMatrix obs;
  json manifest = manifest_base("filter", cfg, seed);
  json outputs = json::array();
  if (observations) {
    obs = read_observations(*observations, model.dim_y);
    manifest["observations"] = observations->string();
  } else {
    const Trajectory traj = simulate(model, cfg.n_steps, seed);
    write_trajectory(out, model, traj);
    obs = traj.observations;
    manifest["observations"] = "simulated from seed";
    outputs.push_back("trajectory.csv");
    outputs.push_back("observations.csv");
  }

  const FilterSummary summary = filter_and_summarize(cfg, obs, seed, timing, out / "samples");

  auto diag = open_output(out / "diagnostics.csv");
  diag << "k,acceptance_rate,ess_median,ess_min,wall_time_s,l2_mean_error,l2_std_error,rho,"
          "projection_failed,reverse_check_failed,mh_rejected\n";
  json steps = json::array();
  for (const StepSummary& s : summary.steps) {
    diag << s.time_index << ',' << num(s.acceptance_rate) << ',' << num(s.ess_median) << ','
         << num(s.ess_min) << ',' << num(s.wall_time) << ',' << optional_num(s.l2_mean_error)
         << ',' << optional_num(s.l2_std_error) << ',' << num(s.rho) << ','
         << s.tally.projection_failed << ',' << s.tally.reverse_check_failed << ','
         << s.tally.mh_rejected << '\n';
    steps.push_back({{"k", s.time_index},
                     {"acceptance_rate", s.acceptance_rate},
                     {"ess_median", s.ess_median},
                     {"ess_min", s.ess_min},
                     {"wall_time_s", s.wall_time},
                     {"rho", s.rho}});
    outputs.push_back(fmt::format("samples/step_{:04d}.csv", s.time_index));
  }
  outputs.push_back("diagnostics.csv");
  manifest["steps"] = steps;
  manifest["total_wall_time_s"] = summary.total_wall_time;
  manifest["outputs"] = outputs;
  write_json(out / "manifest.json", manifest);
  return summary;
}

std::vector<SweepRow> cmd_sweep_s(const RunConfig& cfg, std::uint64_t seed, const fs::path& out,
                                  int workers, bool timing) {
  cfg.validate();
  require(workers >= 1, "cmd_sweep_s: workers must be positive");
  ensure_dir(out);
  const ModelSpec model = build_model(cfg.model);
  const Trajectory traj = simulate(model, cfg.n_steps, seed);
  write_trajectory(out, model, traj);

  struct Job {
    int subset_size;
    int replicate;
  };
  std::vector<Job> jobs;
  // Replicate-major order, so slow drift in machine speed does not bias one s value.
  for (int r = 0; r < cfg.sweep.replicates; ++r) {
    for (int s : cfg.sweep.s_values) jobs.push_back({s, r});
  }
  std::vector<SweepRow> rows(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        RunConfig run_cfg = cfg;
        run_cfg.smcmc.subset_size = jobs[j].subset_size;
        const std::uint64_t run_seed = seed + static_cast<std::uint64_t>(jobs[j].replicate);
        const FilterSummary s =
            filter_and_summarize(run_cfg, traj.observations, run_seed, timing, std::nullopt);
        rows[j] = {jobs[j].subset_size, jobs[j].replicate, s.ess_median, s.l2_mean_error,
                   s.l2_std_error, s.total_wall_time};
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = std::min<int>(workers, static_cast<int>(jobs.size()));
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::stable_sort(rows.begin(), rows.end(), [&](const SweepRow& a, const SweepRow& b) {
    const auto& sv = cfg.sweep.s_values;
    return std::find(sv.begin(), sv.end(), a.subset_size) < std::find(sv.begin(), sv.end(), b.subset_size);
  });
  auto runs = open_output(out / "sweep_runs.csv");
  runs << "s,replicate,ess_median,l2_mean_error,l2_std_error,total_runtime_s\n";
  for (const SweepRow& r : rows) {
    runs << r.subset_size << ',' << r.replicate << ',' << num(r.ess_median) << ','
         << num(r.l2_mean_error) << ',' << num(r.l2_std_error) << ',' << num(r.total_runtime) << '\n';
  }
  auto table = open_output(out / "sweep.csv");
  table << "s,ess_median,l2_mean_error,l2_std_error,total_runtime_s\n";
  std::vector<SweepRow> result = rows;
  for (int s : cfg.sweep.s_values) {
    std::vector<double> ess, mean_err, std_err, runtime;
    for (const SweepRow& r : rows) {
      if (r.subset_size != s) continue;
      ess.push_back(r.ess_median);
      mean_err.push_back(r.l2_mean_error);
      std_err.push_back(r.l2_std_error);
      runtime.push_back(r.total_runtime);
    }
    const SweepRow m{s, -1, median(ess), median(mean_err), median(std_err), median(runtime)};
    table << s << ',' << num(m.ess_median) << ',' << num(m.l2_mean_error) << ','
          << num(m.l2_std_error) << ',' << num(m.total_runtime) << '\n';
    result.push_back(m);
  }

  json manifest = manifest_base("sweep-s", cfg, seed);
  manifest["replicate_seeds"] = "seed + replicate index, shared across s";
  manifest["outputs"] = {"trajectory.csv", "observations.csv", "sweep_runs.csv", "sweep.csv"};
  write_json(out / "manifest.json", manifest);
  return result;
}

ProbeInput make_probe_input(const RunConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const ModelSpec model = build_model(cfg.model);
  if (!model.observation_matrix || model.physical_map) {
    throw ConfigError("probe-delta requires a model with a linear observation map (not '" +
                      cfg.model.name + "')");
  }
  const Matrix& a = *model.observation_matrix;
  const Trajectory traj = simulate(model, 2, seed);
  const Vector y1 = traj.observations.row(0).transpose();
  const Vector y2 = traj.observations.row(1).transpose();
  const KernelParametrization prev_par = build_parametrization({a, y1, 0.0});
  const KernelParametrization cur_par = build_parametrization({a, y2, 0.0});
  const int dz = prev_par.coordinate_dim();
  const int dy = model.dim_y;

  RandomStream rng(seed, 0, StreamPurpose::kProbe);
  ProbeInput input{model, 2, a, y1, y2, StateMatrix(cfg.probe.previous_particles, model.dim_x), {}, {}};
  const Vector x1 = traj.states.row(1).transpose();
  for (int i = 0; i < cfg.probe.previous_particles; ++i) {
    const Vector x = x1 + model.state_scale * rng.normal_vector(model.dim_x);
    Vector zt(model.dim_x);
    zt.head(dz) = prev_par.basis.transpose() * (x - prev_par.particular_solution);
    zt.tail(dy) = rng.normal_vector(dy);
    input.previous_ztilde.row(i) = zt.transpose();
  }
  const Vector x2 = traj.states.row(2).transpose();
  input.ztilde.resize(model.dim_x);
  input.ztilde.head(dz) = cur_par.basis.transpose() * (x2 - cur_par.particular_solution);
  input.ztilde.tail(dy) = rng.normal_vector(dy);
  input.ztilde_proposed =
      cfg.probe.identical_proposal
          ? input.ztilde
          : Vector(input.ztilde + cfg.probe.proposal_scale * rng.normal_vector(model.dim_x));
  return input;
}

std::vector<ProbeRow> cmd_probe_delta(const RunConfig& cfg, std::uint64_t seed, const fs::path& out) {
  const ProbeInput input = make_probe_input(cfg, seed);
  ensure_dir(out);
  const std::vector<ProbeRow> rows = convergence_probe(input, cfg.probe.delta_grid);
  const FactorizedCheck factorized = factorized_limit_check(input, cfg.probe.proposal_scale);

  auto csv = open_output(out / "probe.csv");
  csv << "delta,acceptance_delta,acceptance_limit,gap,basis_distance\n";
  for (const ProbeRow& r : rows) {
    csv << num(r.delta) << ',' << num(r.acceptance_delta) << ',' << num(r.acceptance_limit) << ','
        << num(r.gap) << ',' << num(r.basis_distance) << '\n';
  }
  bool monotone_tail = true;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].delta < 1e-3 && rows[i].gap > rows[i - 1].gap) monotone_tail = false;
  }
  const std::string summary =
      fmt::format("monotone_tail={} final_delta={} final_gap={} factorized_difference={}",
                  monotone_tail ? "yes" : "no", num(rows.back().delta), num(rows.back().gap),
                  num(factorized.difference));
  auto text = open_output(out / "probe_summary.txt");
  text << summary << '\n';
  std::cout << summary << '\n';

  json manifest = manifest_base("probe-delta", cfg, seed);
  manifest["outputs"] = {"probe.csv", "probe_summary.txt"};
  write_json(out / "manifest.json", manifest);
  return rows;
}

int run_cli(const CliOptions& options) {
  try {
    const RunConfig cfg = load_run_config(options.config, options.smoke);
    const std::optional<std::uint64_t> seed = options.seed ? options.seed : cfg.seed;
    if (!seed) throw ConfigError("a seed is mandatory: pass --seed or set run.seed");
    if (options.workers < 1) throw ConfigError("--workers must be at least 1");
    if (options.command == "simulate") {
      cmd_simulate(cfg, *seed, options.out);
    } else if (options.command == "filter") {
      try {
        cmd_filter(cfg, *seed, options.out, options.observations, options.timing);
      } catch (const InitializationError& e) {
        write_json(options.out / "failure.json",
                   json{{"schema_version", kManifestSchemaVersion}, {"error", "initialization"},
                        {"message", e.what()}, {"seed", *seed}});
        throw;
      }
    } else if (options.command == "sweep-s") {
      cmd_sweep_s(cfg, *seed, options.out, options.workers, options.timing);
    } else if (options.command == "probe-delta") {
      cmd_probe_delta(cfg, *seed, options.out);
    } else {
      throw ConfigError("unknown command '" + options.command + "'");
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ContractViolation& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::runtime_error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace smcmc
