#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bmaniac/lambda_grid.hpp"
#include "bmaniac/strategy.hpp"
#include "bmaniac/topology.hpp"

namespace bmaniac {

/// A packet injected at a fixed tick, on top of the random workload.
struct ScriptedPacket {
  std::uint64_t tick = 1;
  NodeId destination{};
  Money budget = 1;
  std::uint32_t timeout = 1;

  bool operator==(const ScriptedPacket&) const = default;
};

/// Per-node deviations from the scenario-wide strategy settings.
struct AgentOverride {
  NodeId node{};
  std::optional<StrategyKind> strategy;
  std::optional<double> theta1;
  std::optional<double> theta2;
  std::optional<SearchMode> search;

  bool operator==(const AgentOverride&) const = default;
};

struct ScenarioConfig {
  // Network. Nodes are the ids 0 .. node_count-1.
  std::size_t node_count = 0;
  NodeId backbone{};
  std::vector<Edge> edges;  // potential edges, normalized
  double p_up = 0.3;
  double p_down = 0.1;

  std::uint64_t ticks = 0;
  std::uint64_t seed = 0;

  // Workload.
  double packet_rate = 0.2;  // expected packets spawned per tick
  Money budget_min = 1;
  Money budget_max = 100;        // B
  std::uint32_t timeout_min = 1;
  std::uint32_t timeout_max = 40;  // T
  std::vector<ScriptedPacket> packets;

  // Agents.
  StrategyKind strategy = StrategyKind::bmaniac;
  double theta1 = 0.4;
  double theta2 = 0.3;
  SearchMode search = SearchMode::exhaustive;
  std::vector<AgentOverride> agents;  // sorted by node

  // Learning.
  double alpha = 1.0;
  std::optional<std::size_t> window;
  LambdaGrid lambda_grid;
  std::uint32_t timeout_bins = 8;

  // Economy.
  double fine_factor = 1.0;
  double backbone_fee_factor = 1.0;

  StrategyKind strategy_for(NodeId node) const;
  StrategyParams params_for(NodeId node) const;

  bool operator==(const ScenarioConfig&) const = default;
};

/// Throws ConfigError naming the first offending field.
void validate(const ScenarioConfig& config);

}  // namespace bmaniac
