#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bmaniac/rng.hpp"

namespace bmaniac {

enum class NodeId : std::uint32_t {};

constexpr std::uint32_t to_index(NodeId n) noexcept { return static_cast<std::uint32_t>(n); }
inline std::string to_string(NodeId n) { return std::to_string(to_index(n)); }

/// Undirected link, stored with a < b.
struct Edge {
  NodeId a;
  NodeId b;

  auto operator<=>(const Edge&) const = default;
};

/// Throws DomainError on a self-loop.
Edge make_edge(NodeId x, NodeId y);

/// Sorts, validates and de-duplicates-checks a potential-edge list. Throws on
/// self-loops, duplicates or endpoints >= node_count.
std::vector<Edge> normalize_edges(std::vector<Edge> edges, std::size_t node_count);

/// Global link state at one tick.
struct TopologySnapshot {
  std::uint64_t tick = 0;
  std::size_t node_count = 0;
  NodeId backbone{};
  std::vector<Edge> edges;  // sorted, unique

  bool has_edge(NodeId x, NodeId y) const;
  bool operator==(const TopologySnapshot&) const = default;
};

/// Per-edge two-state Markov chain parameters.
struct ChurnParams {
  double p_down = 0.1;  // up -> down, per tick
  double p_up = 0.3;    // down -> up, per tick
  std::uint64_t seed = 0;
};

void validate(const ChurnParams& params);

/// Advances every potential edge one tick. Exactly one draw is taken per
/// potential edge, in sorted edge order, whatever its state.
TopologySnapshot step_churn(const TopologySnapshot& snapshot, std::span<const Edge> potential_edges,
                            const ChurnParams& params, Rng& rng);

/// One node's shortest-path picture of a snapshot: reachability, hop counts,
/// the lowest-id next hop on a shortest path, and hop counts from each
/// one-hop neighbor (used to price hypothetical relays).
class RoutingView {
 public:
  NodeId observer() const noexcept { return observer_; }
  NodeId backbone() const noexcept { return backbone_; }
  std::size_t node_count() const noexcept { return hops_.size(); }
  std::uint64_t tick() const noexcept { return tick_; }

  /// Sorted ascending.
  std::span<const NodeId> neighbors() const noexcept { return neighbors_; }
  bool is_neighbor(NodeId n) const;

  bool reachable(NodeId n) const { return hop_count(n).has_value(); }
  /// 0 for the observer itself; nullopt when unreachable.
  std::optional<std::uint32_t> hop_count(NodeId n) const;
  /// nullopt for the observer and unreachable nodes.
  std::optional<NodeId> next_hop(NodeId n) const;
  /// 1 + distance from `neighbor` to `n`; nullopt when `neighbor` cannot reach n.
  std::optional<std::uint32_t> hops_via(NodeId neighbor, NodeId n) const;

  bool operator==(const RoutingView&) const = default;

 private:
  friend RoutingView derive_view(const TopologySnapshot&, NodeId);

  void check_node(NodeId n) const;

  NodeId observer_{};
  NodeId backbone_{};
  std::uint64_t tick_ = 0;
  std::vector<NodeId> neighbors_;
  std::vector<std::optional<std::uint32_t>> hops_;
  std::vector<std::optional<NodeId>> next_hops_;
  // neighbor_hops_[i][n]: distance from neighbors_[i] to n.
  std::vector<std::vector<std::optional<std::uint32_t>>> neighbor_hops_;
};

RoutingView derive_view(const TopologySnapshot& snapshot, NodeId observer);

/// Breadth-first hop counts from `source`; nullopt when unreachable.
std::vector<std::optional<std::uint32_t>> bfs_hops(const TopologySnapshot& snapshot, NodeId source);

/// "tick<TAB>a-b a-b ..." with edges in sorted order.
std::string format_snapshot(const TopologySnapshot& snapshot);

}  // namespace bmaniac
