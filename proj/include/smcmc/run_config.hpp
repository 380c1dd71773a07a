#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "smcmc/models.hpp"
#include "smcmc/linear_noise_kernels.hpp"
#include "smcmc/smcmc_engine.hpp"

namespace smcmc {

struct ModelConfig {
  std::string name = "lgm";  // lgm | sphere | fhn | ks
  int dim_x = 20;
  double sigma = 0.1;  // lgm and sphere noise scale
  FhnParams fhn;
  KsParams ks;
  bool precondition = true;  // ks only

  bool operator==(const ModelConfig&) const;
};

struct SmcmcSettings {
  int n_particles = 10000;
  int subset_size = 20;
  int burn_in = -1;
  int index_moves_per_sweep = 1;
  double rho = 0.05;
  bool adapt_rho = false;
  double target_acceptance = 0.234;
  int pilot_steps = 2000;
  int adaptation_window = 100;
  double adaptation_decay = 0.6;

  bool operator==(const SmcmcSettings&) const = default;
};

struct SweepSettings {
  std::vector<int> s_values{1, 10, 20, 30, 40, 50};
  int replicates = 10;

  bool operator==(const SweepSettings&) const = default;
};

struct ProbeSettings {
  int previous_particles = 10;
  std::vector<double> delta_grid = default_probe_grid();
  double proposal_scale = 0.05;
  bool identical_proposal = false;

  static std::vector<double> default_probe_grid();
  bool operator==(const ProbeSettings&) const = default;
};

struct RunConfig {
  ModelConfig model;
  SmcmcSettings smcmc;
  int n_steps = 30;
  std::optional<std::uint64_t> seed;
  SweepSettings sweep;
  ProbeSettings probe;
  nlohmann::json smoke = nlohmann::json::object();  // merge patch applied by --smoke

  void validate() const;
  bool operator==(const RunConfig&) const;
};

/// Strict parse: unknown keys and out-of-range values raise ConfigError.
RunConfig parse_run_config(const nlohmann::json& doc);
nlohmann::json to_json(const RunConfig& cfg);

/// Reads a config file and applies its smoke patch when requested.
RunConfig load_run_config(const std::filesystem::path& path, bool smoke);

ModelSpec build_model(const ModelConfig& cfg);
SmcmcConfig build_smcmc_config(const SmcmcSettings& settings);

}  // namespace smcmc
