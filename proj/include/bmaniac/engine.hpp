#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bmaniac/auction_model.hpp"
#include "bmaniac/config.hpp"
#include "bmaniac/ledger.hpp"
#include "bmaniac/net_quality.hpp"
#include "bmaniac/strategy.hpp"
#include "bmaniac/topology.hpp"

namespace bmaniac {

enum class PacketOutcome { delivered, expired };

/// One paid hop: `node` won an auction at `price` and owes nothing upstream.
struct ChainLink {
  NodeId node{};
  Money price = 0;
  Money margin = 0;
  bool via_backbone = false;
  std::uint64_t auction_id = 0;
  std::uint32_t timeout = 1;  // announced in that auction
  Lambda lambda1;
  Lambda lambda2;
  std::optional<double> predicted_ps;
};

struct PacketJob {
  std::uint64_t id = 0;
  NodeId source{};  // the backbone
  NodeId destination{};
  Money budget = 1;
  std::uint64_t created = 0;
  std::uint64_t deadline = 0;  // absolute tick; expires at the end of it
  NodeId holder{};
  std::vector<ChainLink> chain;
  bool settled = false;
};

struct Settlement {
  PacketOutcome outcome = PacketOutcome::delivered;
  std::vector<std::pair<NodeId, Money>> deltas;  // per chain node, chain order
  Money injected = 0;                            // net of the backbone fee
  Money fine = 0;
  Money backbone_fee = 0;
};

/// Pays out a terminal packet. Delivered: the backbone pays the first hop and
/// every hop pays its successor its price; a wired (backbone) delivery also
/// pays floor(fee_factor * price) back to the backbone. Expired: the holder
/// pays floor(fine_factor * its price) and nothing else moves.
/// Throws StateError on double settlement or an inconsistent chain.
Settlement settle(Ledger& ledger, PacketJob& job, PacketOutcome outcome, double fine_factor,
                  double backbone_fee_factor);

struct AuctionWinner {
  NodeId node{};
  Money price = 0;
  bool operator==(const AuctionWinner&) const = default;
};

/// Reverse auction: lowest price wins, ties to the lowest id. Abstentions and
/// prices outside [1, budget] are ignored.
std::optional<AuctionWinner> run_auction(const AuctionRequest& request,
                                         const std::map<NodeId, BidDecision>& decisions);

enum class EventKind {
  snapshot,
  auction_opened,
  bid_submitted,
  auction_won,
  packet_forwarded,
  delivered,
  expired,
  settled,
  outcome,
};

std::string_view to_string(EventKind kind);

struct SimEvent {
  std::uint64_t tick = 0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::snapshot;
  nlohmann::ordered_json payload = nlohmann::ordered_json::object();

  /// {"tick":..,"seq":..,"kind":..,<payload fields>} on one line.
  std::string to_json_line() const;
};

struct AgentMetrics {
  NodeId node{};
  StrategyKind strategy = StrategyKind::bmaniac;
  Money profit = 0;
  std::uint64_t bids = 0;
  std::uint64_t wins = 0;
  std::uint64_t deliveries = 0;  // won packets that were delivered
  std::uint64_t fallbacks = 0;   // backbone-fallback bids
  std::uint64_t gains = 0;       // outcome records labelled gain
  std::uint64_t predictions = 0;
  double predicted_sum = 0.0;
  std::uint64_t predicted_gains = 0;

  double win_rate() const;
  double delivery_ratio() const;
  double fallback_frequency() const;
  /// |mean predicted success - realized success rate| over predicted bids.
  std::optional<double> calibration_gap() const;
};

struct StrategyMetrics {
  StrategyKind strategy = StrategyKind::bmaniac;
  std::size_t agents = 0;
  Money profit = 0;
  std::uint64_t bids = 0;
  std::uint64_t wins = 0;
  std::uint64_t deliveries = 0;
  std::uint64_t fallbacks = 0;
  std::uint64_t predictions = 0;
  double predicted_sum = 0.0;
  std::uint64_t predicted_gains = 0;

  double mean_profit() const;
  double win_rate() const;
  double delivery_ratio() const;
  double fallback_frequency() const;
  std::optional<double> calibration_gap() const;
};

struct MetricsReport {
  std::uint64_t seed = 0;
  std::string config_hash;
  std::uint64_t ticks = 0;
  std::uint64_t packets_spawned = 0;
  std::uint64_t packets_delivered = 0;
  std::uint64_t packets_expired = 0;
  std::uint64_t packets_in_flight = 0;
  std::vector<AgentMetrics> agents;
  std::vector<StrategyMetrics> strategies;

  /// Delivered over terminated packets; 0 when none terminated.
  double packet_delivery_ratio() const;
  const StrategyMetrics* strategy(StrategyKind kind) const;

  static constexpr std::string_view kCsvHeader =
      "strategy,agent,profit,deliveries,wins,bids,fallbacks,calibration_gap";
  /// One row per agent, then one row per strategy with agent "all".
  std::string to_csv() const;
  nlohmann::ordered_json to_json() const;
};

/// One deterministic simulation instance.
class Simulation {
 public:
  explicit Simulation(const ScenarioConfig& config);

  /// Runs one tick and returns its events in order.
  std::vector<SimEvent> advance();

  std::uint64_t tick() const noexcept { return snapshot_.tick; }
  const TopologySnapshot& snapshot() const noexcept { return snapshot_; }
  const Ledger& ledger() const noexcept { return ledger_; }
  const std::vector<PacketJob>& active_packets() const noexcept { return active_; }
  std::vector<NodeId> agents() const;
  const NetQualityModel& net_quality(NodeId node) const;
  const AuctionSuccessModel& auction_model(NodeId node) const;

  MetricsReport metrics() const;
  /// All learned tables, one block per agent and model.
  std::string serialize_models() const;

 private:
  struct Agent {
    NodeId node;
    StrategyParams params;
    NetQualityModel netq;
    AuctionSuccessModel aucm;
    Rng rng;
    std::optional<RoutingView> view;
    AgentMetrics metrics;
  };

  struct PendingRecord {
    NodeId agent;
    std::uint64_t auction_id;
    AuctionOutcomeRecord record;
    std::optional<double> predicted_ps;
  };

  Agent& agent(NodeId node);
  const Agent& agent(NodeId node) const;
  void emit(std::vector<SimEvent>& out, EventKind kind, nlohmann::ordered_json payload);
  void spawn(std::vector<SimEvent>& out, NodeId destination, Money budget, std::uint32_t timeout);
  void act(std::vector<SimEvent>& out, PacketJob& job);
  void auction(std::vector<SimEvent>& out, PacketJob& job, Money budget);
  void finish(std::vector<SimEvent>& out, PacketJob& job, PacketOutcome outcome, std::string_view route);
  BidDecision decide(Agent& bidder, const AuctionRequest& request);

  ScenarioConfig config_;
  Rng churn_rng_;
  Rng workload_rng_;
  ChurnParams churn_;
  TopologySnapshot snapshot_;
  Ledger ledger_;
  std::vector<Agent> agents_;
  std::vector<std::optional<std::size_t>> agent_slot_;  // node -> agents_ index
  std::vector<PacketJob> active_;
  std::vector<PendingRecord> pending_;
  std::uint64_t next_packet_ = 0;
  std::uint64_t next_auction_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t spawned_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t expired_ = 0;
};

using EventSink = std::function<void(const SimEvent&)>;

/// Runs config.ticks ticks, streaming events to `sink` when given.
MetricsReport run(const ScenarioConfig& config, const EventSink& sink);

struct RunResult {
  MetricsReport metrics;
  std::vector<std::string> trace;  // JSON lines
};

RunResult run(const ScenarioConfig& config);

}  // namespace bmaniac
