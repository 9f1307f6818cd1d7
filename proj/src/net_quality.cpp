#include "bmaniac/net_quality.hpp"

#include <algorithm>
#include <sstream>

#include "bmaniac/errors.hpp"

namespace bmaniac {

NetQualityModel::NetQualityModel(NodeId observer, std::size_t node_count, double alpha,
                                 std::optional<std::size_t> window)
    : observer_(observer), node_count_(node_count) {
  if (node_count < 2) throw DomainError("a network needs at least two nodes");
  if (to_index(observer) >= node_count) throw DomainError("observer is not a node");

  FeatureSpec next_hop{"f", {}, "ABSENT"};
  for (std::uint32_t n = 0; n < node_count; ++n) {
    if (NodeId{n} != observer) next_hop.values.push_back(std::to_string(n));
  }
  FeatureSpec hops{"h", {}, "UNREACHABLE"};
  for (std::size_t h = 1; h <= node_count; ++h) hops.values.push_back(std::to_string(h));

  const FrequencyTable prototype({"reachable", "unreachable"}, {next_hop, hops}, alpha, window);
  tables_.assign(node_count - 1, prototype);
}

std::size_t NetQualityModel::slot(NodeId n) const {
  const auto i = to_index(n);
  if (i >= node_count_ || n == observer_) {
    throw DomainError("node " + to_string(n) + " is not a destination of observer " + to_string(observer_));
  }
  return i < to_index(observer_) ? i : i - 1;
}

std::size_t NetQualityModel::next_hop_value(NodeId f) const {
  const auto i = to_index(f);
  if (i >= node_count_ || f == observer_) throw DomainError("node " + to_string(f) + " cannot be a next hop");
  return i < to_index(observer_) ? i : i - 1;
}

Evidence NetQualityModel::to_evidence(const PathEvidence& evidence) const {
  const auto& t = tables_.front();
  Evidence e;
  e.set(kNextHopFeature,
        evidence.next_hop ? next_hop_value(*evidence.next_hop) : t.absent_index(kNextHopFeature));
  if (evidence.hops) {
    if (*evidence.hops < 1 || *evidence.hops > node_count_) throw DomainError("hop count out of domain");
    e.set(kHopsFeature, *evidence.hops - 1);
  } else {
    e.set(kHopsFeature, t.absent_index(kHopsFeature));
  }
  return e;
}

void NetQualityModel::ingest_view(const RoutingView& view) {
  if (view.observer() != observer_) {
    throw ConfigError("observer", "view of node " + to_string(view.observer()) +
                                      " fed to the model of node " + to_string(observer_));
  }
  if (view.node_count() != node_count_) throw ConfigError("nodes", "view node count mismatch");
  std::size_t values[2];
  for (std::uint32_t i = 0; i < node_count_; ++i) {
    const NodeId n{i};
    if (n == observer_) continue;
    auto& table = tables_[slot(n)];
    if (const auto h = view.hop_count(n)) {
      values[kNextHopFeature] = next_hop_value(*view.next_hop(n));
      values[kHopsFeature] = *h - 1;
      table.observe(kReachable, values);
    } else {
      values[kNextHopFeature] = table.absent_index(kNextHopFeature);
      values[kHopsFeature] = table.absent_index(kHopsFeature);
      table.observe(kUnreachable, values);
    }
  }
}

double NetQualityModel::path_success_probability(NodeId n, const PathEvidence& evidence) const {
  return tables_[slot(n)].posterior(kReachable, to_evidence(evidence));
}

const FrequencyTable& NetQualityModel::table(NodeId n) const { return tables_[slot(n)]; }

std::vector<NodeId> NetQualityModel::destinations() const {
  std::vector<NodeId> out;
  for (std::uint32_t i = 0; i < node_count_; ++i) {
    if (NodeId{i} != observer_) out.push_back(NodeId{i});
  }
  return out;
}

std::string NetQualityModel::serialize() const {
  std::ostringstream out;
  for (const auto n : destinations()) {
    out << "destination\t" << to_index(n) << '\n';
    tables_[slot(n)].serialize(out);
  }
  return out.str();
}

std::vector<RankedCandidate> rank_candidates(const NetQualityModel& model, NodeId d,
                                             const RoutingView& view) {
  std::vector<RankedCandidate> out;
  if (d == model.observer()) return out;
  for (const auto f : view.neighbors()) {
    const auto h = view.hops_via(f, d);
    out.push_back({f, h, model.path_success_probability(d, PathEvidence{f, h})});
  }
  std::sort(out.begin(), out.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    return a.next_hop < b.next_hop;
  });
  return out;
}

}  // namespace bmaniac
