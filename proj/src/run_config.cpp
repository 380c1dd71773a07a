#include "smcmc/run_config.hpp"

#include <fstream>
#include <set>

#include "smcmc/linear_noise_kernels.hpp"

namespace smcmc {

using nlohmann::json;

namespace {

void reject_unknown(const json& block, const std::set<std::string>& known, const std::string& where) {
  if (!block.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : block.items()) {
    if (!known.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& block, const char* key, T& out, const std::string& where) {
  if (!block.contains(key)) return;
  try {
    out = block.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

void check(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

std::vector<double> ProbeSettings::default_probe_grid() { return default_delta_grid(); }

bool ModelConfig::operator==(const ModelConfig& o) const {
  return name == o.name && dim_x == o.dim_x && sigma == o.sigma && precondition == o.precondition &&
         fhn.sigma == o.fhn.sigma && fhn.epsilon == o.fhn.epsilon && fhn.gamma == o.fhn.gamma &&
         fhn.beta == o.fhn.beta && fhn.delta == o.fhn.delta && ks.dim_x == o.ks.dim_x &&
         ks.stride == o.ks.stride && ks.length == o.ks.length && ks.gamma == o.ks.gamma &&
         ks.observation_sd == o.ks.observation_sd && ks.matern.smoothness == o.ks.matern.smoothness &&
         ks.matern.range == o.ks.matern.range && ks.matern.variance == o.ks.matern.variance;
}

bool RunConfig::operator==(const RunConfig& o) const {
  return model == o.model && smcmc == o.smcmc && n_steps == o.n_steps && seed == o.seed &&
         sweep == o.sweep && probe == o.probe && smoke == o.smoke;
}

void RunConfig::validate() const {
  static const std::set<std::string> kModels{"lgm", "sphere", "fhn", "ks"};
  check(kModels.count(model.name) == 1, "model.name: unknown model '" + model.name + "'");
  if (model.name == "lgm" || model.name == "sphere") {
    check(model.dim_x >= 2, "model.dim_x must be at least 2");
    check(model.sigma > 0.0, "model.sigma must be positive");
  }
  if (model.name == "fhn") {
    check(model.fhn.sigma > 0.0 && model.fhn.epsilon > 0.0 && model.fhn.delta > 0.0,
          "model.fhn: sigma, epsilon and delta must be positive");
  }
  if (model.name == "ks") {
    check(model.ks.dim_x >= 5, "model.ks.dim_x must be at least 5");
    check(model.ks.stride >= 1 && model.ks.dim_x % model.ks.stride == 0 &&
              model.ks.dim_x / model.ks.stride < model.ks.dim_x,
          "model.ks.stride must divide dim_x and leave d_y < d_x");
    check(model.ks.gamma > 0.0 && model.ks.length > 0.0, "model.ks: gamma and length must be positive");
    check(model.ks.matern.smoothness == 0.5, "model.ks.matern.smoothness: only 0.5 is supported");
    check(model.ks.matern.range > 0.0 && model.ks.matern.variance > 0.0,
          "model.ks.matern: range and variance must be positive");
    check(model.ks.observation_sd > 0.0, "model.ks.observation_sd must be positive");
  }
  const SmcmcSettings& s = smcmc;
  check(s.n_particles >= 1, "smcmc.n_particles must be positive");
  check(s.subset_size >= 1 && s.subset_size <= s.n_particles,
        "smcmc.subset_size must lie in [1, n_particles]");
  check(s.index_moves_per_sweep >= 1, "smcmc.index_moves_per_sweep must be positive");
  check(s.rho > 0.0, "smcmc.rho must be positive");
  check(s.target_acceptance > 0.0 && s.target_acceptance < 1.0,
        "smcmc.target_acceptance must lie in (0, 1)");
  check(!s.adapt_rho || s.pilot_steps >= 500, "smcmc.pilot_steps must be at least 500");
  check(s.adaptation_window >= 1 && s.adaptation_decay > 0.0, "smcmc: invalid adaptation settings");
  check(n_steps >= 1, "run.n_steps must be positive");
  check(!sweep.s_values.empty(), "sweep.s_values must not be empty");
  for (int v : sweep.s_values) {
    check(v >= 1 && v <= s.n_particles, "sweep.s_values entries must lie in [1, n_particles]");
  }
  check(sweep.replicates >= 1, "sweep.replicates must be positive");
  check(probe.previous_particles >= 1, "probe.previous_particles must be positive");
  check(!probe.delta_grid.empty(), "probe.delta_grid must not be empty");
  for (std::size_t i = 0; i < probe.delta_grid.size(); ++i) {
    check(probe.delta_grid[i] > 0.0 && (i == 0 || probe.delta_grid[i] < probe.delta_grid[i - 1]),
          "probe.delta_grid must be positive and strictly decreasing");
  }
  check(probe.proposal_scale > 0.0, "probe.proposal_scale must be positive");
}

RunConfig parse_run_config(const json& doc) {
  reject_unknown(doc, {"model", "smcmc", "run", "sweep", "probe", "smoke"}, "config");
  RunConfig cfg;
  if (doc.contains("model")) {
    const json& m = doc.at("model");
    reject_unknown(m, {"name", "dim_x", "sigma", "fhn", "ks", "precondition"}, "model");
    read(m, "name", cfg.model.name, "model");
    read(m, "dim_x", cfg.model.dim_x, "model");
    read(m, "sigma", cfg.model.sigma, "model");
    read(m, "precondition", cfg.model.precondition, "model");
    if (m.contains("fhn")) {
      const json& f = m.at("fhn");
      reject_unknown(f, {"sigma", "epsilon", "gamma", "beta", "delta"}, "model.fhn");
      read(f, "sigma", cfg.model.fhn.sigma, "model.fhn");
      read(f, "epsilon", cfg.model.fhn.epsilon, "model.fhn");
      read(f, "gamma", cfg.model.fhn.gamma, "model.fhn");
      read(f, "beta", cfg.model.fhn.beta, "model.fhn");
      read(f, "delta", cfg.model.fhn.delta, "model.fhn");
    }
    if (m.contains("ks")) {
      const json& k = m.at("ks");
      reject_unknown(k, {"dim_x", "stride", "length", "gamma", "observation_sd", "matern"}, "model.ks");
      read(k, "dim_x", cfg.model.ks.dim_x, "model.ks");
      read(k, "stride", cfg.model.ks.stride, "model.ks");
      read(k, "length", cfg.model.ks.length, "model.ks");
      read(k, "gamma", cfg.model.ks.gamma, "model.ks");
      read(k, "observation_sd", cfg.model.ks.observation_sd, "model.ks");
      if (k.contains("matern")) {
        const json& mt = k.at("matern");
        reject_unknown(mt, {"smoothness", "range", "variance"}, "model.ks.matern");
        read(mt, "smoothness", cfg.model.ks.matern.smoothness, "model.ks.matern");
        read(mt, "range", cfg.model.ks.matern.range, "model.ks.matern");
        read(mt, "variance", cfg.model.ks.matern.variance, "model.ks.matern");
      }
    }
  }
  if (doc.contains("smcmc")) {
    const json& s = doc.at("smcmc");
    reject_unknown(s, {"n_particles", "subset_size", "burn_in", "index_moves_per_sweep", "rho",
                       "adapt_rho", "target_acceptance", "pilot_steps", "adaptation_window",
                       "adaptation_decay"},
                   "smcmc");
    read(s, "n_particles", cfg.smcmc.n_particles, "smcmc");
    read(s, "subset_size", cfg.smcmc.subset_size, "smcmc");
    read(s, "burn_in", cfg.smcmc.burn_in, "smcmc");
    read(s, "index_moves_per_sweep", cfg.smcmc.index_moves_per_sweep, "smcmc");
    read(s, "rho", cfg.smcmc.rho, "smcmc");
    read(s, "adapt_rho", cfg.smcmc.adapt_rho, "smcmc");
    read(s, "target_acceptance", cfg.smcmc.target_acceptance, "smcmc");
    read(s, "pilot_steps", cfg.smcmc.pilot_steps, "smcmc");
    read(s, "adaptation_window", cfg.smcmc.adaptation_window, "smcmc");
    read(s, "adaptation_decay", cfg.smcmc.adaptation_decay, "smcmc");
  }
  if (doc.contains("run")) {
    const json& r = doc.at("run");
    reject_unknown(r, {"n_steps", "seed"}, "run");
    read(r, "n_steps", cfg.n_steps, "run");
    if (r.contains("seed") && !r.at("seed").is_null()) {
      std::uint64_t seed = 0;
      read(r, "seed", seed, "run");
      cfg.seed = seed;
    }
  }
  if (doc.contains("sweep")) {
    const json& w = doc.at("sweep");
    reject_unknown(w, {"s_values", "replicates"}, "sweep");
    read(w, "s_values", cfg.sweep.s_values, "sweep");
    read(w, "replicates", cfg.sweep.replicates, "sweep");
  }
  if (doc.contains("probe")) {
    const json& p = doc.at("probe");
    reject_unknown(p, {"previous_particles", "delta_grid", "proposal_scale", "identical_proposal"},
                   "probe");
    read(p, "previous_particles", cfg.probe.previous_particles, "probe");
    read(p, "delta_grid", cfg.probe.delta_grid, "probe");
    read(p, "proposal_scale", cfg.probe.proposal_scale, "probe");
    read(p, "identical_proposal", cfg.probe.identical_proposal, "probe");
  }
  if (doc.contains("smoke")) {
    cfg.smoke = doc.at("smoke");
    if (!cfg.smoke.is_object()) throw ConfigError("smoke: expected an object");
  }
  cfg.validate();
  return cfg;
}

json to_json(const RunConfig& cfg) {
  const ModelConfig& m = cfg.model;
  json doc;
  doc["model"] = {
      {"name", m.name},
      {"dim_x", m.dim_x},
      {"sigma", m.sigma},
      {"precondition", m.precondition},
      {"fhn",
       {{"sigma", m.fhn.sigma},
        {"epsilon", m.fhn.epsilon},
        {"gamma", m.fhn.gamma},
        {"beta", m.fhn.beta},
        {"delta", m.fhn.delta}}},
      {"ks",
       {{"dim_x", m.ks.dim_x},
        {"stride", m.ks.stride},
        {"length", m.ks.length},
        {"gamma", m.ks.gamma},
        {"observation_sd", m.ks.observation_sd},
        {"matern",
         {{"smoothness", m.ks.matern.smoothness},
          {"range", m.ks.matern.range},
          {"variance", m.ks.matern.variance}}}}},
  };
  const SmcmcSettings& s = cfg.smcmc;
  doc["smcmc"] = {{"n_particles", s.n_particles},
                  {"subset_size", s.subset_size},
                  {"burn_in", s.burn_in},
                  {"index_moves_per_sweep", s.index_moves_per_sweep},
                  {"rho", s.rho},
                  {"adapt_rho", s.adapt_rho},
                  {"target_acceptance", s.target_acceptance},
                  {"pilot_steps", s.pilot_steps},
                  {"adaptation_window", s.adaptation_window},
                  {"adaptation_decay", s.adaptation_decay}};
  doc["run"] = {{"n_steps", cfg.n_steps}};
  doc["run"]["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
  doc["sweep"] = {{"s_values", cfg.sweep.s_values}, {"replicates", cfg.sweep.replicates}};
  doc["probe"] = {{"previous_particles", cfg.probe.previous_particles},
                  {"delta_grid", cfg.probe.delta_grid},
                  {"proposal_scale", cfg.probe.proposal_scale},
                  {"identical_proposal", cfg.probe.identical_proposal}};
  doc["smoke"] = cfg.smoke;
  return doc;
}

RunConfig load_run_config(const std::filesystem::path& path, bool smoke) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  if (smoke) {
    if (!doc.contains("smoke")) throw ConfigError("config " + path.string() + " has no smoke block");
    json patch = doc.at("smoke");
    doc.merge_patch(patch);
  }
  return parse_run_config(doc);
}

ModelSpec build_model(const ModelConfig& cfg) {
  if (cfg.name == "lgm") return lgm_spec(cfg.dim_x, cfg.sigma);
  if (cfg.name == "sphere") return sphere_spec(cfg.dim_x, cfg.sigma);
  if (cfg.name == "fhn") return fhn_spec(cfg.fhn);
  if (cfg.name == "ks") {
    ModelSpec model = ks_spec(cfg.ks);
    if (!cfg.precondition) return model;
    const KsOperators ops = ks_operators(cfg.ks);
    const Matrix sigma = ks_preconditioner_covariance(ops, cfg.ks.observation_sd);
    return precondition(model, Matrix(sigma.llt().matrixL()));
  }
  throw ConfigError("unknown model '" + cfg.name + "'");
}

SmcmcConfig build_smcmc_config(const SmcmcSettings& s) {
  SmcmcConfig cfg;
  cfg.n_particles = s.n_particles;
  cfg.subset_size = s.subset_size;
  cfg.burn_in = s.burn_in;
  cfg.index_moves_per_sweep = s.index_moves_per_sweep;
  cfg.kernel.rho = s.rho;
  cfg.kernel.target_acceptance = s.target_acceptance;
  cfg.adapt_rho = s.adapt_rho;
  cfg.adaptation.pilot_steps = s.pilot_steps;
  cfg.adaptation.window = s.adaptation_window;
  cfg.adaptation.decay = s.adaptation_decay;
  return cfg;
}

}  // namespace smcmc
