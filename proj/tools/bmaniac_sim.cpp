// Command-line driver: single scenario runs and seed sweeps.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bmaniac/errors.hpp"
#include "bmaniac/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Auction-based data offloading simulator"};

  std::string scenario_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  unsigned sweep = 0;
  std::string strategy;

  app.add_option("--scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory")->required();
  app.add_option("--seed", seed, "Override the scenario seed");
  app.add_option("--sweep", sweep, "Run seeds 1..N as independent instances")->check(CLI::PositiveNumber);
  app.add_option("--strategy", strategy, "Use one strategy for every agent")
      ->check(CLI::IsMember({"bmaniac", "random", "fixed_margin", "always_backbone"}));

  CLI11_PARSE(app, argc, argv);

  bmaniac::ScenarioConfig config;
  try {
    config = bmaniac::load_scenario(scenario_path);
    if (seed) config.seed = *seed;
    if (!strategy.empty()) bmaniac::apply_strategy_override(config, bmaniac::parse_strategy_kind(strategy));
  } catch (const bmaniac::ConfigError& e) {
    std::cerr << "invalid scenario: " << e.what() << '\n';
    return 2;
  }

  if (sweep > 0) {
    if (seed) std::cerr << "note: --seed is ignored in sweep mode (seeds 1.." << sweep << ")\n";
    const int rc = bmaniac::run_sweep(config, sweep, out_dir, std::cerr);
    if (rc == 0) std::cout << "sweep of " << sweep << " seeds written to " << out_dir << '\n';
    return rc;
  }
  const int rc = bmaniac::run_scenario(config, out_dir, std::cerr);
  if (rc == 0) {
    std::cout << "run written to " << out_dir << " (config " << bmaniac::config_hash(config) << ")\n";
  }
  return rc;
}
