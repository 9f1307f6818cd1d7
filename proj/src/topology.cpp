#include "bmaniac/topology.hpp"

#include <algorithm>
#include <deque>

#include "bmaniac/errors.hpp"

namespace bmaniac {
namespace {

using Adjacency = std::vector<std::vector<NodeId>>;

Adjacency adjacency(const TopologySnapshot& snapshot) {
  Adjacency adj(snapshot.node_count);
  for (const auto& e : snapshot.edges) {
    adj[to_index(e.a)].push_back(e.b);
    adj[to_index(e.b)].push_back(e.a);
  }
  for (auto& list : adj) std::sort(list.begin(), list.end());
  return adj;
}

std::vector<std::optional<std::uint32_t>> bfs(const Adjacency& adj, NodeId source) {
  std::vector<std::optional<std::uint32_t>> dist(adj.size());
  std::deque<NodeId> queue{source};
  dist[to_index(source)] = 0;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for (const auto v : adj[to_index(u)]) {
      if (dist[to_index(v)]) continue;
      dist[to_index(v)] = *dist[to_index(u)] + 1;
      queue.push_back(v);
    }
  }
  return dist;
}

}  // namespace

Edge make_edge(NodeId x, NodeId y) {
  if (x == y) throw DomainError("self-loop on node " + to_string(x));
  return x < y ? Edge{x, y} : Edge{y, x};
}

std::vector<Edge> normalize_edges(std::vector<Edge> edges, std::size_t node_count) {
  for (auto& e : edges) {
    e = make_edge(e.a, e.b);
    if (to_index(e.b) >= node_count) throw DomainError("edge endpoint " + to_string(e.b) + " is not a node");
  }
  std::sort(edges.begin(), edges.end());
  if (auto dup = std::adjacent_find(edges.begin(), edges.end()); dup != edges.end()) {
    throw DomainError("duplicate edge " + to_string(dup->a) + "-" + to_string(dup->b));
  }
  return edges;
}

bool TopologySnapshot::has_edge(NodeId x, NodeId y) const {
  if (x == y) return false;
  return std::binary_search(edges.begin(), edges.end(), make_edge(x, y));
}

void validate(const ChurnParams& params) {
  if (!(params.p_down >= 0.0 && params.p_down <= 1.0)) throw DomainError("p_down must lie in [0, 1]");
  if (!(params.p_up >= 0.0 && params.p_up <= 1.0)) throw DomainError("p_up must lie in [0, 1]");
}

TopologySnapshot step_churn(const TopologySnapshot& snapshot, std::span<const Edge> potential_edges,
                            const ChurnParams& params, Rng& rng) {
  validate(params);
  for (const auto& e : snapshot.edges) {
    if (!std::binary_search(potential_edges.begin(), potential_edges.end(), e)) {
      throw DomainError("edge " + to_string(e.a) + "-" + to_string(e.b) + " is not a potential edge");
    }
  }
  TopologySnapshot next;
  next.tick = snapshot.tick + 1;
  next.node_count = snapshot.node_count;
  next.backbone = snapshot.backbone;
  next.edges.reserve(potential_edges.size());
  for (const auto& e : potential_edges) {
    const bool up = std::binary_search(snapshot.edges.begin(), snapshot.edges.end(), e);
    const double u = rng.uniform01();
    const bool stays_up = up ? !(u < params.p_down) : (u < params.p_up);
    if (stays_up) next.edges.push_back(e);
  }
  // potential_edges is sorted, so next.edges is too.
  return next;
}

bool RoutingView::is_neighbor(NodeId n) const {
  return std::binary_search(neighbors_.begin(), neighbors_.end(), n);
}

void RoutingView::check_node(NodeId n) const {
  if (to_index(n) >= hops_.size()) throw DomainError("unknown node " + to_string(n));
}

std::optional<std::uint32_t> RoutingView::hop_count(NodeId n) const {
  check_node(n);
  return hops_[to_index(n)];
}

std::optional<NodeId> RoutingView::next_hop(NodeId n) const {
  check_node(n);
  return next_hops_[to_index(n)];
}

std::optional<std::uint32_t> RoutingView::hops_via(NodeId neighbor, NodeId n) const {
  check_node(n);
  const auto it = std::lower_bound(neighbors_.begin(), neighbors_.end(), neighbor);
  if (it == neighbors_.end() || *it != neighbor) {
    throw DomainError("node " + to_string(neighbor) + " is not a neighbor of " + to_string(observer_));
  }
  const auto& dist = neighbor_hops_[static_cast<std::size_t>(it - neighbors_.begin())];
  if (!dist[to_index(n)]) return std::nullopt;
  return *dist[to_index(n)] + 1;
}

std::vector<std::optional<std::uint32_t>> bfs_hops(const TopologySnapshot& snapshot, NodeId source) {
  if (to_index(source) >= snapshot.node_count) throw DomainError("unknown node " + to_string(source));
  return bfs(adjacency(snapshot), source);
}

RoutingView derive_view(const TopologySnapshot& snapshot, NodeId observer) {
  if (to_index(observer) >= snapshot.node_count) throw DomainError("unknown observer " + to_string(observer));
  const auto adj = adjacency(snapshot);

  RoutingView view;
  view.observer_ = observer;
  view.backbone_ = snapshot.backbone;
  view.tick_ = snapshot.tick;
  view.neighbors_ = adj[to_index(observer)];
  view.hops_ = bfs(adj, observer);
  view.neighbor_hops_.reserve(view.neighbors_.size());
  for (const auto f : view.neighbors_) view.neighbor_hops_.push_back(bfs(adj, f));

  view.next_hops_.assign(snapshot.node_count, std::nullopt);
  for (std::uint32_t n = 0; n < snapshot.node_count; ++n) {
    const auto h = view.hops_[n];
    if (!h || *h == 0) continue;
    // Neighbors are sorted, so the first match is the lowest id.
    for (std::size_t i = 0; i < view.neighbors_.size(); ++i) {
      const auto d = view.neighbor_hops_[i][n];
      if (d && *d + 1 == *h) {
        view.next_hops_[n] = view.neighbors_[i];
        break;
      }
    }
  }
  return view;
}

std::string format_snapshot(const TopologySnapshot& snapshot) {
  std::string out = std::to_string(snapshot.tick) + '\t';
  for (std::size_t i = 0; i < snapshot.edges.size(); ++i) {
    if (i) out += ' ';
    out += to_string(snapshot.edges[i].a) + '-' + to_string(snapshot.edges[i].b);
  }
  return out;
}

}  // namespace bmaniac
