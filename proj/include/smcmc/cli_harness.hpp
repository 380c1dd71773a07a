#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "smcmc/linear_noise_kernels.hpp"
#include "smcmc/run_config.hpp"
#include "smcmc/smcmc_engine.hpp"

namespace smcmc {

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr const char* kCodeVersion = "1.0.0";

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3 };

struct CliOptions {
  std::string command;  // simulate | filter | sweep-s | probe-delta
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::filesystem::path> observations;
  std::optional<std::uint64_t> seed;
  bool smoke = false;
  int workers = 1;
  bool timing = true;
};

/// Per-step summary of one filter run in physical coordinates.
struct StepSummary {
  int time_index = 0;
  double acceptance_rate = 0.0;
  double ess_median = 0.0;
  double ess_min = 0.0;
  double wall_time = 0.0;
  double rho = 0.0;
  Vector mean;
  Vector stddev;
  std::optional<double> l2_mean_error;  // against the Kalman oracle when the model is linear
  std::optional<double> l2_std_error;
  RejectionTally tally;
};

struct FilterSummary {
  std::vector<StepSummary> steps;
  double total_wall_time = 0.0;
  double ess_median = 0.0;       // median over k of the per-step median ESS
  double l2_mean_error = 0.0;    // mean over k; NaN without an oracle
  double l2_std_error = 0.0;
};

struct SweepRow {
  int subset_size = 0;
  int replicate = 0;  // -1 marks the median row
  double ess_median = 0.0;
  double l2_mean_error = 0.0;
  double l2_std_error = 0.0;
  double total_runtime = 0.0;
};

/// Runs the filter on given observations; optionally writes per-step sample CSVs.
FilterSummary filter_and_summarize(const RunConfig& cfg, const StateMatrix& observations,
                                   std::uint64_t seed, bool timing,
                                   const std::optional<std::filesystem::path>& sample_dir);

Trajectory cmd_simulate(const RunConfig& cfg, std::uint64_t seed, const std::filesystem::path& out);

FilterSummary cmd_filter(const RunConfig& cfg, std::uint64_t seed, const std::filesystem::path& out,
                         const std::optional<std::filesystem::path>& observations, bool timing);

/// Every (s, replicate) row followed by one median row per s (replicate = -1).
std::vector<SweepRow> cmd_sweep_s(const RunConfig& cfg, std::uint64_t seed,
                                  const std::filesystem::path& out, int workers, bool timing);

ProbeInput make_probe_input(const RunConfig& cfg, std::uint64_t seed);

std::vector<ProbeRow> cmd_probe_delta(const RunConfig& cfg, std::uint64_t seed,
                                      const std::filesystem::path& out);

StateMatrix read_observations(const std::filesystem::path& path, int dim_y);

/// Dispatches a command and maps failures onto exit codes.
int run_cli(const CliOptions& options);

}  // namespace smcmc
