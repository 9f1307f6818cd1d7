#include "bmaniac/strategy.hpp"

#include <algorithm>
#include <vector>

#include "bmaniac/errors.hpp"

namespace bmaniac {
namespace {

struct Candidate {
  std::size_t f = 0;  // index into the relay list
  std::size_t i1 = 0;
  std::size_t i2 = 0;
  double score = 0.0;
};

struct SearchSpace {
  const LambdaGrid& grid;
  std::vector<NodeId> relays;
  std::vector<double> pcd;            // per relay
  std::vector<std::optional<double>> ps;  // per (i1, i2); nullopt = inadmissible pair
  double theta1;
  double theta2;

  std::optional<double> pair_ps(std::size_t i1, std::size_t i2) const { return ps[i1 * grid.size() + i2]; }

  bool feasible(std::size_t f, std::size_t i1, std::size_t i2) const {
    const auto p = pair_ps(i1, i2);
    return p && *p >= theta1 && pcd[f] >= theta2;
  }

  Candidate make(std::size_t f, std::size_t i1, std::size_t i2) const {
    return {f, i1, i2, objective(pcd[f], grid.at(i1), grid.at(i2))};
  }

  // Strict "a beats b" under the documented tie-break order.
  bool better(const Candidate& a, const Candidate& b) const {
    if (a.score != b.score) return a.score > b.score;
    if (a.i2 != b.i2) return a.i2 > b.i2;  // grid is sorted ascending
    if (a.i1 != b.i1) return a.i1 < b.i1;
    return relays[a.f] < relays[b.f];
  }
};

std::optional<Candidate> search_exhaustive(const SearchSpace& space) {
  std::optional<Candidate> best;
  const auto n = space.grid.size();
  for (std::size_t f = 0; f < space.relays.size(); ++f) {
    if (space.pcd[f] < space.theta2) continue;
    for (std::size_t i1 = 0; i1 < n; ++i1) {
      for (std::size_t i2 = 0; i2 < n; ++i2) {
        if (!space.feasible(f, i1, i2)) continue;
        const auto c = space.make(f, i1, i2);
        if (!best || space.better(c, *best)) best = c;
      }
    }
  }
  return best;
}

// Steepest ascent over the 8-neighborhood in grid-index space, per relay,
// starting from the first feasible pair in row-major order.
std::optional<Candidate> search_hill_climb(const SearchSpace& space) {
  std::optional<Candidate> best;
  const auto n = static_cast<std::ptrdiff_t>(space.grid.size());
  for (std::size_t f = 0; f < space.relays.size(); ++f) {
    if (space.pcd[f] < space.theta2) continue;
    std::optional<Candidate> current;
    for (std::ptrdiff_t i1 = 0; i1 < n && !current; ++i1) {
      for (std::ptrdiff_t i2 = 0; i2 < n && !current; ++i2) {
        if (space.feasible(f, i1, i2)) current = space.make(f, i1, i2);
      }
    }
    if (!current) continue;
    while (true) {
      std::optional<Candidate> step;
      for (std::ptrdiff_t d1 = -1; d1 <= 1; ++d1) {
        for (std::ptrdiff_t d2 = -1; d2 <= 1; ++d2) {
          const auto i1 = static_cast<std::ptrdiff_t>(current->i1) + d1;
          const auto i2 = static_cast<std::ptrdiff_t>(current->i2) + d2;
          if ((d1 == 0 && d2 == 0) || i1 < 0 || i2 < 0 || i1 >= n || i2 >= n) continue;
          if (!space.feasible(f, i1, i2)) continue;
          const auto c = space.make(f, i1, i2);
          if (space.better(c, *current) && (!step || space.better(c, *step))) step = c;
        }
      }
      if (!step) break;
      current = step;
    }
    if (!best || space.better(*current, *best)) best = current;
  }
  return best;
}

BidDecision fallback(const AuctionRequest& request, const RoutingView& view) {
  if (view.reachable(view.backbone())) return BackboneFallback{request.budget};
  return Abstain{};
}

}  // namespace

std::string_view to_string(SearchMode mode) {
  return mode == SearchMode::exhaustive ? "exhaustive" : "hill_climb";
}

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::bmaniac: return "bmaniac";
    case StrategyKind::random: return "random";
    case StrategyKind::fixed_margin: return "fixed_margin";
    case StrategyKind::always_backbone: return "always_backbone";
  }
  return "?";
}

SearchMode parse_search_mode(std::string_view text) {
  if (text == "exhaustive") return SearchMode::exhaustive;
  if (text == "hill_climb" || text == "hill-climb") return SearchMode::hill_climb;
  throw DomainError("unknown search mode '" + std::string(text) + "'");
}

StrategyKind parse_strategy_kind(std::string_view text) {
  for (auto kind : {StrategyKind::bmaniac, StrategyKind::random, StrategyKind::fixed_margin,
                    StrategyKind::always_backbone}) {
    if (text == to_string(kind)) return kind;
  }
  if (text == "b-maniac" || text == "b_maniac") return StrategyKind::bmaniac;
  throw DomainError("unknown strategy '" + std::string(text) + "'");
}

void validate(const StrategyParams& params) {
  if (!(params.theta1 >= 0.0 && params.theta1 <= 1.0)) throw DomainError("theta1 must lie in [0, 1]");
  if (!(params.theta2 >= 0.0 && params.theta2 <= 1.0)) throw DomainError("theta2 must lie in [0, 1]");
}

double objective(double pcd, double lambda1, double lambda2) { return pcd + lambda2 - lambda1; }

double objective(double pcd, Lambda lambda1, Lambda lambda2) {
  const auto den = std::int64_t{lambda1.den} * lambda2.den;
  const auto diff = std::int64_t{lambda2.num} * lambda1.den - std::int64_t{lambda1.num} * lambda2.den;
  return pcd + static_cast<double>(diff) / static_cast<double>(den);
}

Money bid_price(Money budget, Lambda lambda1) {
  return budget * static_cast<Money>(lambda1.den - lambda1.num) / static_cast<Money>(lambda1.den);
}

Money kept_margin(Money budget, Lambda lambda2) {
  return budget * static_cast<Money>(lambda2.num) / static_cast<Money>(lambda2.den);
}

std::vector<NodeId> relay_candidates(const AuctionRequest& request, const RoutingView& view) {
  std::vector<NodeId> out;
  for (const auto f : view.neighbors()) {
    if (f != view.backbone() && f != request.announcer) out.push_back(f);
  }
  return out;
}

BidDecision decide_bid(const NetQualityModel& netq, const AuctionSuccessModel& aucm,
                       const AuctionRequest& request, const RoutingView& view,
                       const StrategyParams& params) {
  if (view.observer() != netq.observer()) throw DomainError("view and model belong to different nodes");
  const auto& grid = params.grid;
  SearchSpace space{grid, relay_candidates(request, view), {}, {}, params.theta1, params.theta2};

  if (!space.relays.empty()) {
    const auto den = grid.denominator();
    space.ps.assign(grid.size() * grid.size(), std::nullopt);
    for (std::size_t i1 = 0; i1 < grid.size(); ++i1) {
      const auto l1 = grid.at(i1);
      if (bid_price(request.budget, l1) < 1) continue;
      for (std::size_t i2 = 0; i2 < grid.size(); ++i2) {
        const auto l2 = grid.at(i2);
        if (l1.num + l2.num > den) continue;  // lambda1 + lambda2 <= 1
        space.ps[i1 * grid.size() + i2] =
            aucm.success_probability(request.timeout, l1, l2, request.destination);
      }
    }
    for (const auto f : space.relays) {
      space.pcd.push_back(netq.path_success_probability(
          request.destination, PathEvidence{f, view.hops_via(f, request.destination)}));
    }
  }

  const auto best = params.search == SearchMode::exhaustive ? search_exhaustive(space)
                                                            : search_hill_climb(space);
  if (!best) return fallback(request, view);

  const auto l1 = grid.at(best->i1);
  const auto l2 = grid.at(best->i2);
  Bid bid;
  bid.price = bid_price(request.budget, l1);
  bid.margin = kept_margin(request.budget, l2);
  bid.next_hop = space.relays[best->f];
  bid.lambda1 = l1;
  bid.lambda2 = l2;
  bid.predicted_pcd = space.pcd[best->f];
  bid.predicted_ps = space.pair_ps(best->i1, best->i2);
  return bid;
}

BidDecision baseline_decide(StrategyKind kind, const AuctionRequest& request, const RoutingView& view,
                            const LambdaGrid& grid, Rng& rng) {
  switch (kind) {
    case StrategyKind::always_backbone:
      return fallback(request, view);

    case StrategyKind::random: {
      const auto relays = relay_candidates(request, view);
      if (relays.empty()) return Abstain{};
      std::vector<std::pair<Lambda, Lambda>> pairs;
      for (std::size_t i1 = 0; i1 < grid.size(); ++i1) {
        const auto l1 = grid.at(i1);
        if (bid_price(request.budget, l1) < 1) continue;
        for (std::size_t i2 = 0; i2 < grid.size(); ++i2) {
          const auto l2 = grid.at(i2);
          if (l1.num + l2.num <= grid.denominator()) pairs.emplace_back(l1, l2);
        }
      }
      if (pairs.empty()) return Abstain{};
      const auto [l1, l2] = pairs[rng.uniform_below(pairs.size())];
      const auto f = relays[rng.uniform_below(relays.size())];
      return Bid{bid_price(request.budget, l1), kept_margin(request.budget, l2), f, l1, l2,
                 std::nullopt, std::nullopt};
    }

    case StrategyKind::fixed_margin: {
      constexpr Lambda l1{1, 10};
      constexpr Lambda l2{2, 10};
      const auto h = view.hop_count(request.destination);
      if (!h || *h == 0) return fallback(request, view);
      std::optional<NodeId> next;
      for (const auto f : relay_candidates(request, view)) {
        if (view.hops_via(f, request.destination) == h) {
          next = f;
          break;
        }
      }
      const auto price = bid_price(request.budget, l1);
      if (!next || price < 1) return fallback(request, view);
      return Bid{price, kept_margin(request.budget, l2), *next, l1, l2, std::nullopt, std::nullopt};
    }

    case StrategyKind::bmaniac:
      break;
  }
  throw DomainError("baseline_decide does not handle the bmaniac strategy");
}

std::optional<Money> decision_price(const BidDecision& decision) {
  if (const auto* bid = std::get_if<Bid>(&decision)) return bid->price;
  if (const auto* fb = std::get_if<BackboneFallback>(&decision)) return fb->price;
  return std::nullopt;
}

}  // namespace bmaniac
