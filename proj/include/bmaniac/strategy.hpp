#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "bmaniac/auction_model.hpp"
#include "bmaniac/lambda_grid.hpp"
#include "bmaniac/net_quality.hpp"
#include "bmaniac/rng.hpp"
#include "bmaniac/topology.hpp"

namespace bmaniac {

using Money = std::int64_t;

enum class SearchMode { exhaustive, hill_climb };
enum class StrategyKind { bmaniac, random, fixed_margin, always_backbone };

std::string_view to_string(SearchMode mode);
std::string_view to_string(StrategyKind kind);
SearchMode parse_search_mode(std::string_view text);
StrategyKind parse_strategy_kind(std::string_view text);

struct AuctionRequest {
  std::uint64_t auction_id = 0;
  NodeId announcer{};
  NodeId destination{};
  Money budget = 1;           // b, whole units, >= 1
  std::uint32_t timeout = 1;  // t, ticks, >= 1
};

struct StrategyParams {
  double theta1 = 0.4;  // floor on P(s | t, lambda1, lambda2, d)
  double theta2 = 0.3;  // floor on P(C_d | f, h)
  LambdaGrid grid;
  SearchMode search = SearchMode::exhaustive;

  bool operator==(const StrategyParams&) const = default;
};

void validate(const StrategyParams& params);

struct Bid {
  Money price = 0;   // floor(b (1 - lambda1))
  Money margin = 0;  // floor(b lambda2), kept when re-auctioning
  NodeId next_hop{};
  Lambda lambda1;
  Lambda lambda2;
  std::optional<double> predicted_pcd;
  std::optional<double> predicted_ps;

  bool operator==(const Bid&) const = default;
};

struct BackboneFallback {
  Money price = 0;  // always the full budget
  bool operator==(const BackboneFallback&) const = default;
};

struct Abstain {
  bool operator==(const Abstain&) const = default;
};

using BidDecision = std::variant<Bid, BackboneFallback, Abstain>;

/// pcd + lambda2 - lambda1.
double objective(double pcd, double lambda1, double lambda2);
/// Same value with the lambda difference taken exactly first, so equal
/// differences produce bit-identical scores.
double objective(double pcd, Lambda lambda1, Lambda lambda2);

Money bid_price(Money budget, Lambda lambda1);
Money kept_margin(Money budget, Lambda lambda2);

/// Relay candidates for a request: current neighbors other than the backbone
/// and the announcing node.
std::vector<NodeId> relay_candidates(const AuctionRequest& request, const RoutingView& view);

/// Maximizes objective(P(C_d | f, h_f), lambda1, lambda2) over relay
/// candidates f and grid pairs subject to
///   P(s | t, lambda1, lambda2, d) >= theta1,  P(C_d | f, h_f) >= theta2,
///   lambda1 + lambda2 <= 1,  floor(b (1 - lambda1)) >= 1.
/// Ties prefer larger lambda2, then smaller lambda1, then lower next-hop id.
/// With nothing feasible: BackboneFallback{b} if the backbone is reachable,
/// otherwise Abstain.
BidDecision decide_bid(const NetQualityModel& netq, const AuctionSuccessModel& aucm,
                       const AuctionRequest& request, const RoutingView& view,
                       const StrategyParams& params);

/// Comparison strategies. `kind` must not be bmaniac.
BidDecision baseline_decide(StrategyKind kind, const AuctionRequest& request, const RoutingView& view,
                            const LambdaGrid& grid, Rng& rng);

/// Price of a non-abstaining decision.
std::optional<Money> decision_price(const BidDecision& decision);

}  // namespace bmaniac
