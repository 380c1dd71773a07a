#include <CLI11.hpp>

#include <utility>

#include "smcmc/cli_harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Sequential MCMC filtering on constraint manifolds"};
  app.require_subcommand(1);
  smcmc::CliOptions options;
  std::string config, out, observations;
  std::uint64_t seed = 0;

  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "draw a trajectory and its observations"},
      {"filter", "run the filter on given or simulated observations"},
      {"sweep-s", "replicated filter runs over conditioning-set sizes"},
      {"probe-delta", "low-noise acceptance against its degenerate limit"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "64-bit seed (overrides run.seed)");
    sub->add_option("--out", out, "output directory")->required();
    sub->add_flag("--smoke", options.smoke, "apply the config's smoke block");
    sub->add_flag("--no-timing", [&](std::int64_t) { options.timing = false; },
                  "write zero wall times so outputs are byte-identical across runs");
    if (std::string(name) == "filter") {
      sub->add_option("--observations", observations, "observation CSV (k, y_1..y_dy)")
          ->check(CLI::ExistingFile);
    }
    if (std::string(name) == "sweep-s") {
      sub->add_option("--workers", options.workers, "concurrent filter runs")->check(CLI::PositiveNumber);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : smcmc::kExitConfig;
  }

  CLI::App* sub = app.get_subcommands().front();
  options.command = sub->get_name();
  options.config = config;
  options.out = out;
  if (!observations.empty()) options.observations = observations;
  if (sub->count("--seed")) options.seed = seed;
  return smcmc::run_cli(options);
}
