#include "bmaniac/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bmaniac/errors.hpp"

namespace bmaniac {
namespace {

using Json = nlohmann::ordered_json;

Money floor_fraction(double factor, Money amount) {
  return std::max<Money>(0, static_cast<Money>(std::floor(factor * static_cast<double>(amount))));
}

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::optional<double> gap(std::uint64_t predictions, double predicted_sum, std::uint64_t predicted_gains) {
  if (predictions == 0) return std::nullopt;
  const auto n = static_cast<double>(predictions);
  return std::abs(predicted_sum / n - static_cast<double>(predicted_gains) / n);
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Settlement settle(Ledger& ledger, PacketJob& job, PacketOutcome outcome, double fine_factor,
                  double backbone_fee_factor) {
  if (job.settled) throw StateError("packet " + std::to_string(job.id) + " settled twice");
  const auto& chain = job.chain;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (chain[i].node == chain[j].node) throw StateError("payment chain revisits a node");
    }
  }

  Settlement s;
  s.outcome = outcome;
  for (const auto& link : chain) s.deltas.emplace_back(link.node, 0);

  if (outcome == PacketOutcome::delivered) {
    if (chain.empty()) throw StateError("delivered packet has no payment chain");
    if (chain.front().price < 1 || chain.front().price > job.budget) {
      throw StateError("first hop price outside [1, budget]");
    }
    for (std::size_t i = 1; i < chain.size(); ++i) {
      if (chain[i].price < 1 || chain[i].price > chain[i - 1].price - chain[i - 1].margin) {
        throw StateError("hop price exceeds upstream price minus kept margin");
      }
    }
    ledger.inject(chain.front().node, chain.front().price);
    s.deltas.front().second += chain.front().price;
    for (std::size_t i = 1; i < chain.size(); ++i) {
      ledger.transfer(chain[i - 1].node, chain[i].node, chain[i].price);
      s.deltas[i - 1].second -= chain[i].price;
      s.deltas[i].second += chain[i].price;
    }
    if (chain.back().via_backbone) {
      s.backbone_fee = floor_fraction(backbone_fee_factor, chain.back().price);
      ledger.charge_backbone_fee(chain.back().node, s.backbone_fee);
      s.deltas.back().second -= s.backbone_fee;
    }
    s.injected = chain.front().price - s.backbone_fee;
  } else if (!chain.empty()) {
    s.fine = floor_fraction(fine_factor, chain.back().price);
    ledger.charge_fine(chain.back().node, s.fine);
    s.deltas.back().second -= s.fine;
  }
  job.settled = true;
  return s;
}

std::optional<AuctionWinner> run_auction(const AuctionRequest& request,
                                         const std::map<NodeId, BidDecision>& decisions) {
  std::optional<AuctionWinner> best;
  for (const auto& [node, decision] : decisions) {
    const auto price = decision_price(decision);
    if (!price || *price < 1 || *price > request.budget) continue;
    // Ascending map order: a strictly lower price is needed to displace.
    if (!best || *price < best->price) best = AuctionWinner{node, *price};
  }
  return best;
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::snapshot: return "snapshot";
    case EventKind::auction_opened: return "auction_opened";
    case EventKind::bid_submitted: return "bid_submitted";
    case EventKind::auction_won: return "auction_won";
    case EventKind::packet_forwarded: return "packet_forwarded";
    case EventKind::delivered: return "delivered";
    case EventKind::expired: return "expired";
    case EventKind::settled: return "settled";
    case EventKind::outcome: return "outcome";
  }
  return "?";
}

std::string SimEvent::to_json_line() const {
  Json j;
  j["tick"] = tick;
  j["seq"] = seq;
  j["kind"] = std::string(to_string(kind));
  for (const auto& [key, value] : payload.items()) j[key] = value;
  return j.dump();
}

double AgentMetrics::win_rate() const { return ratio(wins, bids); }
double AgentMetrics::delivery_ratio() const { return ratio(deliveries, wins); }
double AgentMetrics::fallback_frequency() const { return ratio(fallbacks, bids); }
std::optional<double> AgentMetrics::calibration_gap() const {
  return gap(predictions, predicted_sum, predicted_gains);
}

double StrategyMetrics::mean_profit() const {
  return agents == 0 ? 0.0 : static_cast<double>(profit) / static_cast<double>(agents);
}
double StrategyMetrics::win_rate() const { return ratio(wins, bids); }
double StrategyMetrics::delivery_ratio() const { return ratio(deliveries, wins); }
double StrategyMetrics::fallback_frequency() const { return ratio(fallbacks, bids); }
std::optional<double> StrategyMetrics::calibration_gap() const {
  return gap(predictions, predicted_sum, predicted_gains);
}

double MetricsReport::packet_delivery_ratio() const {
  return ratio(packets_delivered, packets_delivered + packets_expired);
}

const StrategyMetrics* MetricsReport::strategy(StrategyKind kind) const {
  for (const auto& s : strategies) {
    if (s.strategy == kind) return &s;
  }
  return nullptr;
}

std::string MetricsReport::to_csv() const {
  std::ostringstream out;
  const auto gap_cell = [](const std::optional<double>& g) {
    if (!g) return std::string("NA");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", *g);
    return std::string(buf);
  };
  out << kCsvHeader << '\n';
  for (const auto& a : agents) {
    out << to_string(a.strategy) << ',' << to_index(a.node) << ',' << a.profit << ',' << a.deliveries
        << ',' << a.wins << ',' << a.bids << ',' << a.fallbacks << ',' << gap_cell(a.calibration_gap())
        << '\n';
  }
  for (const auto& s : strategies) {
    out << to_string(s.strategy) << ",all," << s.profit << ',' << s.deliveries << ',' << s.wins << ','
        << s.bids << ',' << s.fallbacks << ',' << gap_cell(s.calibration_gap()) << '\n';
  }
  return out.str();
}

nlohmann::ordered_json MetricsReport::to_json() const {
  Json j;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  j["ticks"] = ticks;
  j["packets_spawned"] = packets_spawned;
  j["packets_delivered"] = packets_delivered;
  j["packets_expired"] = packets_expired;
  j["packets_in_flight"] = packets_in_flight;
  j["packet_delivery_ratio"] = packet_delivery_ratio();
  Json per_strategy = Json::array();
  for (const auto& s : strategies) {
    Json row;
    row["strategy"] = std::string(to_string(s.strategy));
    row["agents"] = s.agents;
    row["profit"] = s.profit;
    row["mean_profit"] = s.mean_profit();
    row["delivery_ratio"] = s.delivery_ratio();
    row["win_rate"] = s.win_rate();
    row["fallback_frequency"] = s.fallback_frequency();
    row["calibration_gap"] = optional_json(s.calibration_gap());
    per_strategy.push_back(std::move(row));
  }
  j["strategies"] = std::move(per_strategy);
  Json per_agent = Json::array();
  for (const auto& a : agents) {
    Json row;
    row["agent"] = to_index(a.node);
    row["strategy"] = std::string(to_string(a.strategy));
    row["profit"] = a.profit;
    row["bids"] = a.bids;
    row["wins"] = a.wins;
    row["deliveries"] = a.deliveries;
    row["fallbacks"] = a.fallbacks;
    row["delivery_ratio"] = a.delivery_ratio();
    row["win_rate"] = a.win_rate();
    row["fallback_frequency"] = a.fallback_frequency();
    row["calibration_gap"] = optional_json(a.calibration_gap());
    per_agent.push_back(std::move(row));
  }
  j["agents"] = std::move(per_agent);
  return j;
}

Simulation::Simulation(const ScenarioConfig& config)
    : config_(config),
      churn_rng_(derive_seed(config.seed, 0)),
      workload_rng_(derive_seed(config.seed, 1)),
      churn_{config.p_down, config.p_up, derive_seed(config.seed, 0)},
      ledger_(config.node_count) {
  validate(config_);
  snapshot_.tick = 0;
  snapshot_.node_count = config_.node_count;
  snapshot_.backbone = config_.backbone;
  snapshot_.edges = config_.edges;

  agent_slot_.assign(config_.node_count, std::nullopt);
  for (std::uint32_t i = 0; i < config_.node_count; ++i) {
    const NodeId n{i};
    if (n == config_.backbone) continue;
    agent_slot_[i] = agents_.size();
    AgentMetrics metrics;
    metrics.node = n;
    metrics.strategy = config_.strategy_for(n);
    agents_.push_back(Agent{
        n,
        config_.params_for(n),
        NetQualityModel(n, config_.node_count, config_.alpha, config_.window),
        AuctionSuccessModel(config_.node_count, config_.lambda_grid, config_.timeout_max,
                            config_.timeout_bins, config_.alpha, config_.window),
        Rng(derive_seed(config_.seed, 1000 + i)),
        std::nullopt,
        metrics,
    });
  }
}

Simulation::Agent& Simulation::agent(NodeId node) {
  const auto i = to_index(node);
  if (i >= agent_slot_.size() || !agent_slot_[i]) throw DomainError("node " + to_string(node) + " is not an agent");
  return agents_[*agent_slot_[i]];
}

const Simulation::Agent& Simulation::agent(NodeId node) const {
  return const_cast<Simulation*>(this)->agent(node);
}

std::vector<NodeId> Simulation::agents() const {
  std::vector<NodeId> out;
  for (const auto& a : agents_) out.push_back(a.node);
  return out;
}

const NetQualityModel& Simulation::net_quality(NodeId node) const { return agent(node).netq; }
const AuctionSuccessModel& Simulation::auction_model(NodeId node) const { return agent(node).aucm; }

void Simulation::emit(std::vector<SimEvent>& out, EventKind kind, nlohmann::ordered_json payload) {
  out.push_back(SimEvent{snapshot_.tick, seq_++, kind, std::move(payload)});
}

std::vector<SimEvent> Simulation::advance() {
  std::vector<SimEvent> out;

  // 1. churn
  snapshot_ = step_churn(snapshot_, config_.edges, churn_, churn_rng_);
  {
    Json edges = Json::array();
    for (const auto& e : snapshot_.edges) edges.push_back({to_index(e.a), to_index(e.b)});
    Json payload;
    payload["edges"] = std::move(edges);
    emit(out, EventKind::snapshot, std::move(payload));
  }

  // 2. every agent learns from its fresh view
  for (auto& a : agents_) {
    a.view = derive_view(snapshot_, a.node);
    a.netq.ingest_view(*a.view);
  }

  // 3. workload
  const auto now = snapshot_.tick;
  for (const auto& p : config_.packets) {
    if (p.tick == now) spawn(out, p.destination, p.budget, p.timeout);
  }
  {
    const double whole = std::floor(config_.packet_rate);
    auto count = static_cast<std::uint64_t>(whole);
    if (workload_rng_.bernoulli(config_.packet_rate - whole)) ++count;
    for (std::uint64_t k = 0; k < count; ++k) {
      const auto d = agents_[workload_rng_.uniform_below(agents_.size())].node;
      const auto b = workload_rng_.uniform_int(config_.budget_min, config_.budget_max);
      const auto t = static_cast<std::uint32_t>(workload_rng_.uniform_int(config_.timeout_min, config_.timeout_max));
      spawn(out, d, b, t);
    }
  }

  // 4. holders deliver, fall back, or re-auction
  for (auto& job : active_) act(out, job);

  // 5. deadlines
  for (auto& job : active_) {
    if (!job.settled && now >= job.deadline) finish(out, job, PacketOutcome::expired, "");
  }
  std::erase_if(active_, [](const PacketJob& j) { return j.settled; });

  // 6. feedback to the auction-success learners
  for (const auto& pending : pending_) {
    auto& a = agent(pending.agent);
    auto record = pending.record;
    record.lambda1 = a.aucm.grid().nearest(record.lambda1);
    record.lambda2 = a.aucm.grid().nearest(record.lambda2);
    a.aucm.record_outcome(record);
    a.metrics.gains += record.success ? 1 : 0;
    if (pending.predicted_ps) {
      ++a.metrics.predictions;
      a.metrics.predicted_sum += *pending.predicted_ps;
      a.metrics.predicted_gains += record.success ? 1 : 0;
    }
    Json payload;
    payload["agent"] = to_index(pending.agent);
    payload["auction"] = pending.auction_id;
    payload["timeout"] = record.timeout;
    payload["lambda1"] = record.lambda1.value();
    payload["lambda2"] = record.lambda2.value();
    payload["destination"] = to_index(record.destination);
    payload["success"] = record.success;
    payload["predicted_ps"] = optional_json(pending.predicted_ps);
    emit(out, EventKind::outcome, std::move(payload));
  }
  pending_.clear();
  return out;
}

void Simulation::spawn(std::vector<SimEvent>& /*out*/, NodeId destination, Money budget, std::uint32_t timeout) {
  PacketJob job;
  job.id = next_packet_++;
  job.source = config_.backbone;
  job.destination = destination;
  job.budget = budget;
  job.created = snapshot_.tick;
  job.deadline = snapshot_.tick + timeout;
  job.holder = config_.backbone;
  active_.push_back(std::move(job));
  ++spawned_;
}

void Simulation::act(std::vector<SimEvent>& out, PacketJob& job) {
  if (job.settled) return;
  const auto now = snapshot_.tick;
  if (job.holder == config_.backbone) {
    if (job.deadline > now) auction(out, job, job.budget);
    return;
  }
  const auto& link = job.chain.back();
  const auto& view = *agent(job.holder).view;
  if (link.via_backbone) {
    if (view.reachable(config_.backbone)) finish(out, job, PacketOutcome::delivered, "backbone");
    return;
  }
  if (snapshot_.has_edge(job.holder, job.destination)) {
    finish(out, job, PacketOutcome::delivered, "direct");
    return;
  }
  const Money budget = link.price - link.margin;
  if (job.deadline > now && budget >= 1) auction(out, job, budget);
}

BidDecision Simulation::decide(Agent& bidder, const AuctionRequest& request) {
  const auto kind = bidder.metrics.strategy;
  if (kind == StrategyKind::bmaniac) {
    return decide_bid(bidder.netq, bidder.aucm, request, *bidder.view, bidder.params);
  }
  return baseline_decide(kind, request, *bidder.view, bidder.params.grid, bidder.rng);
}

void Simulation::auction(std::vector<SimEvent>& out, PacketJob& job, Money budget) {
  const auto announcer = job.holder;
  std::vector<NodeId> bidders;
  for (const auto& e : snapshot_.edges) {
    NodeId other{};
    if (e.a == announcer) other = e.b;
    else if (e.b == announcer) other = e.a;
    else continue;
    if (other == config_.backbone || other == job.destination) continue;
    const bool in_chain = std::any_of(job.chain.begin(), job.chain.end(),
                                      [&](const ChainLink& l) { return l.node == other; });
    if (!in_chain) bidders.push_back(other);
  }
  if (bidders.empty()) return;
  std::sort(bidders.begin(), bidders.end());

  AuctionRequest request;
  request.auction_id = next_auction_++;
  request.announcer = announcer;
  request.destination = job.destination;
  request.budget = budget;
  request.timeout = static_cast<std::uint32_t>(job.deadline - snapshot_.tick);

  {
    Json payload;
    payload["auction"] = request.auction_id;
    payload["packet"] = job.id;
    payload["announcer"] = to_index(announcer);
    payload["destination"] = to_index(job.destination);
    payload["budget"] = budget;
    payload["timeout"] = request.timeout;
    Json ids = Json::array();
    for (const auto b : bidders) ids.push_back(to_index(b));
    payload["bidders"] = std::move(ids);
    emit(out, EventKind::auction_opened, std::move(payload));
  }

  std::map<NodeId, BidDecision> decisions;
  for (const auto b : bidders) {
    auto decision = decide(agent(b), request);
    Json payload;
    payload["auction"] = request.auction_id;
    payload["bidder"] = to_index(b);
    if (const auto* bid = std::get_if<Bid>(&decision)) {
      payload["decision"] = "bid";
      payload["price"] = bid->price;
      payload["margin"] = bid->margin;
      payload["next_hop"] = to_index(bid->next_hop);
      payload["lambda1"] = bid->lambda1.value();
      payload["lambda2"] = bid->lambda2.value();
      payload["predicted_pcd"] = optional_json(bid->predicted_pcd);
      payload["predicted_ps"] = optional_json(bid->predicted_ps);
    } else if (const auto* fb = std::get_if<BackboneFallback>(&decision)) {
      payload["decision"] = "backbone";
      payload["price"] = fb->price;
    } else {
      payload["decision"] = "abstain";
    }
    emit(out, EventKind::bid_submitted, std::move(payload));
    decisions.emplace(b, std::move(decision));
  }

  const auto winner = run_auction(request, decisions);
  for (const auto& [node, decision] : decisions) {
    if (!decision_price(decision)) continue;
    auto& a = agent(node);
    ++a.metrics.bids;
    const auto* bid = std::get_if<Bid>(&decision);
    if (!bid) ++a.metrics.fallbacks;
    if (winner && winner->node == node) continue;
    AuctionOutcomeRecord record;
    record.timeout = request.timeout;
    record.lambda1 = bid ? bid->lambda1 : Lambda{0, 1};
    record.lambda2 = bid ? bid->lambda2 : Lambda{0, 1};
    record.destination = job.destination;
    record.success = false;
    pending_.push_back({node, request.auction_id, record, bid ? bid->predicted_ps : std::nullopt});
  }
  if (!winner) return;

  const auto& decision = decisions.at(winner->node);
  ChainLink link;
  link.node = winner->node;
  link.price = winner->price;
  link.auction_id = request.auction_id;
  link.timeout = request.timeout;
  if (const auto* bid = std::get_if<Bid>(&decision)) {
    link.margin = bid->margin;
    link.lambda1 = bid->lambda1;
    link.lambda2 = bid->lambda2;
    link.predicted_ps = bid->predicted_ps;
  } else {
    link.via_backbone = true;
  }
  job.chain.push_back(link);
  job.holder = winner->node;
  ++agent(winner->node).metrics.wins;

  Json won;
  won["auction"] = request.auction_id;
  won["packet"] = job.id;
  won["winner"] = to_index(winner->node);
  won["price"] = winner->price;
  emit(out, EventKind::auction_won, std::move(won));
  Json forwarded;
  forwarded["packet"] = job.id;
  forwarded["from"] = to_index(announcer);
  forwarded["to"] = to_index(winner->node);
  forwarded["price"] = winner->price;
  forwarded["via_backbone"] = link.via_backbone;
  emit(out, EventKind::packet_forwarded, std::move(forwarded));
}

void Simulation::finish(std::vector<SimEvent>& out, PacketJob& job, PacketOutcome outcome,
                        std::string_view route) {
  const bool delivered = outcome == PacketOutcome::delivered;
  {
    Json payload;
    payload["packet"] = job.id;
    payload["holder"] = to_index(job.holder);
    payload["destination"] = to_index(job.destination);
    if (delivered) {
      payload["route"] = std::string(route);
    } else {
      payload["created"] = job.created;
      payload["deadline"] = job.deadline;
    }
    emit(out, delivered ? EventKind::delivered : EventKind::expired, std::move(payload));
  }

  const auto s = settle(ledger_, job, outcome, config_.fine_factor, config_.backbone_fee_factor);
  if (!ledger_.balanced()) throw StateError("ledger identity violated");
  {
    Json transfers = Json::array();
    for (const auto& [node, amount] : s.deltas) {
      Json t;
      t["node"] = to_index(node);
      t["amount"] = amount;
      transfers.push_back(std::move(t));
    }
    Json payload;
    payload["packet"] = job.id;
    payload["outcome"] = delivered ? "delivered" : "expired";
    payload["transfers"] = std::move(transfers);
    payload["injected"] = s.injected;
    payload["fine"] = s.fine;
    payload["backbone_fee"] = s.backbone_fee;
    payload["sum_balances"] = ledger_.sum_balances();
    payload["total_injected"] = ledger_.injected();
    payload["total_fines"] = ledger_.fines();
    emit(out, EventKind::settled, std::move(payload));
  }

  delivered ? ++delivered_ : ++expired_;
  for (std::size_t i = 0; i < job.chain.size(); ++i) {
    const auto& link = job.chain[i];
    if (delivered) ++agent(link.node).metrics.deliveries;
    AuctionOutcomeRecord record;
    record.timeout = link.timeout;
    record.lambda1 = link.via_backbone ? Lambda{0, 1} : link.lambda1;
    record.lambda2 = link.via_backbone ? Lambda{0, 1} : link.lambda2;
    record.destination = job.destination;
    record.success = delivered && s.deltas[i].second > 0;
    pending_.push_back({link.node, link.auction_id, record, link.predicted_ps});
  }
}

MetricsReport Simulation::metrics() const {
  MetricsReport report;
  report.seed = config_.seed;
  report.ticks = snapshot_.tick;
  report.packets_spawned = spawned_;
  report.packets_delivered = delivered_;
  report.packets_expired = expired_;
  report.packets_in_flight = active_.size();
  for (const auto& a : agents_) {
    auto m = a.metrics;
    m.profit = ledger_.balance(a.node);
    report.agents.push_back(m);
  }
  for (auto kind : {StrategyKind::bmaniac, StrategyKind::random, StrategyKind::fixed_margin,
                    StrategyKind::always_backbone}) {
    StrategyMetrics s;
    s.strategy = kind;
    for (const auto& m : report.agents) {
      if (m.strategy != kind) continue;
      ++s.agents;
      s.profit += m.profit;
      s.bids += m.bids;
      s.wins += m.wins;
      s.deliveries += m.deliveries;
      s.fallbacks += m.fallbacks;
      s.predictions += m.predictions;
      s.predicted_sum += m.predicted_sum;
      s.predicted_gains += m.predicted_gains;
    }
    if (s.agents > 0) report.strategies.push_back(s);
  }
  return report;
}

std::string Simulation::serialize_models() const {
  std::ostringstream out;
  for (const auto& a : agents_) {
    out << "agent\t" << to_index(a.node) << "\tnet_quality\n" << a.netq.serialize();
    out << "agent\t" << to_index(a.node) << "\tauction_success\n" << a.aucm.serialize();
  }
  return out.str();
}

MetricsReport run(const ScenarioConfig& config, const EventSink& sink) {
  Simulation sim(config);
  for (std::uint64_t t = 0; t < config.ticks; ++t) {
    auto events = sim.advance();
    if (sink) {
      for (const auto& e : events) sink(e);
    }
  }
  return sim.metrics();
}

RunResult run(const ScenarioConfig& config) {
  RunResult result;
  result.metrics = run(config, [&](const SimEvent& e) { result.trace.push_back(e.to_json_line()); });
  return result;
}

}  // namespace bmaniac
