#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "bmaniac/core_bayes.hpp"
#include "bmaniac/topology.hpp"

namespace bmaniac {

/// (f, h): candidate next hop and hop count. nullopt stands for ABSENT and
/// UNREACHABLE respectively.
struct PathEvidence {
  std::optional<NodeId> next_hop;
  std::optional<std::uint32_t> hops;
};

/// One reachable/unreachable classifier per destination, trained on the
/// observer's successive routing views.
class NetQualityModel {
 public:
  static constexpr std::size_t kReachable = 0;
  static constexpr std::size_t kUnreachable = 1;
  static constexpr std::size_t kNextHopFeature = 0;
  static constexpr std::size_t kHopsFeature = 1;

  NetQualityModel(NodeId observer, std::size_t node_count, double alpha = 1.0,
                  std::optional<std::size_t> window = std::nullopt);

  NodeId observer() const noexcept { return observer_; }
  std::size_t node_count() const noexcept { return node_count_; }

  /// Appends one sample per destination. Throws ConfigError when the view
  /// belongs to another observer.
  void ingest_view(const RoutingView& view);

  /// Normalized P(C_n = reachable | f, h).
  double path_success_probability(NodeId n, const PathEvidence& evidence) const;

  const FrequencyTable& table(NodeId n) const;
  Evidence to_evidence(const PathEvidence& evidence) const;

  /// Destinations in ascending order (every node except the observer).
  std::vector<NodeId> destinations() const;

  /// One serialized table per destination, each preceded by
  /// "destination<TAB><id>".
  std::string serialize() const;

 private:
  std::size_t slot(NodeId n) const;
  std::size_t next_hop_value(NodeId f) const;

  NodeId observer_;
  std::size_t node_count_;
  std::vector<FrequencyTable> tables_;  // indexed by slot(n)
};

struct RankedCandidate {
  NodeId next_hop;
  std::optional<std::uint32_t> hops;  // 1 + distance from next_hop to d
  double probability;
};

/// Every current neighbor scored by P(C_d | f, h_f), best first; ties go to
/// the lower id. Empty when there are no neighbors or d is the observer.
std::vector<RankedCandidate> rank_candidates(const NetQualityModel& model, NodeId d,
                                             const RoutingView& view);

}  // namespace bmaniac
