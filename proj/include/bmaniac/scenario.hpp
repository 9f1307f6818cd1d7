#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bmaniac/config.hpp"
#include "bmaniac/engine.hpp"

namespace bmaniac {

/// Parses and validates a JSON scenario, filling defaults. Throws ConfigError
/// naming the missing or invalid field.
ScenarioConfig parse_scenario(std::string_view json_text);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Canonical JSON form; parse_scenario(emit_scenario(c).dump()) == c.
nlohmann::ordered_json emit_scenario(const ScenarioConfig& config);

/// 16 hex digits of FNV-1a over the canonical JSON.
std::string config_hash(const ScenarioConfig& config);

/// Sets every agent, overrides included, to `kind`.
void apply_strategy_override(ScenarioConfig& config, StrategyKind kind);

inline constexpr std::string_view kMetricsFile = "metrics.csv";
inline constexpr std::string_view kTraceFile = "trace.jsonl";
inline constexpr std::string_view kModelsFile = "models.txt";
inline constexpr std::string_view kSummaryFile = "summary.json";

/// Runs one simulation and writes metrics.csv, trace.jsonl, models.txt and
/// summary.json into `out_dir`. Returns 0, or 1 after printing to `err`.
int run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_dir, std::ostream& err);

/// Metrics of independent runs, one per seed, in seed order. Runs execute
/// concurrently; trace output is skipped.
std::vector<MetricsReport> sweep_reports(const ScenarioConfig& config, std::span<const std::uint64_t> seeds,
                                         unsigned threads = 0);

/// Per-seed rows: "seed," followed by the metrics.csv columns.
std::string sweep_metrics_csv(std::span<const MetricsReport> reports);
/// One row per agent and per strategy: mean and sample sd over seeds.
std::string sweep_summary_csv(std::span<const MetricsReport> reports);

/// Seeds 1..n_seeds, each written to out_dir/seed_<k>/ as in run_scenario,
/// plus sweep_metrics.csv and sweep_summary.csv.
int run_sweep(const ScenarioConfig& config, unsigned n_seeds, const std::filesystem::path& out_dir,
              std::ostream& err);

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for fewer than two values
};

MeanSd mean_sd(std::span<const double> values);

}  // namespace bmaniac
