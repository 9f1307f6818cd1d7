#include <doctest.h>

#include <random>

#include "bmaniac/errors.hpp"
#include "bmaniac/strategy.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace bmaniac;
using testgen::Instance;
using testgen::random_instance;

namespace {

NodeId N(std::uint32_t i) { return NodeId{i}; }

TopologySnapshot graph(std::size_t n, std::vector<std::pair<std::uint32_t, std::uint32_t>> links,
                       std::uint32_t backbone = 0) {
  TopologySnapshot s;
  s.node_count = n;
  s.backbone = N(backbone);
  for (const auto& [a, b] : links) s.edges.push_back(make_edge(N(a), N(b)));
  s.edges = normalize_edges(s.edges, n);
  return s;
}

void check_matches_oracle(const Instance& in, const BidDecision& got) {
  const auto want = oracle::best_bid(in.netq, in.aucm, in.req, in.view, in.params);
  switch (want.kind) {
    case oracle::OracleDecision::Kind::abstain:
      CHECK(std::holds_alternative<Abstain>(got));
      break;
    case oracle::OracleDecision::Kind::fallback:
      REQUIRE(std::holds_alternative<BackboneFallback>(got));
      CHECK(std::get<BackboneFallback>(got).price == in.req.budget);
      break;
    case oracle::OracleDecision::Kind::bid: {
      REQUIRE(std::holds_alternative<Bid>(got));
      const auto& b = std::get<Bid>(got);
      const auto den = in.params.grid.denominator();
      CHECK(b.next_hop == want.tuple.f);
      CHECK(b.lambda1 == Lambda{want.tuple.k1, den});
      CHECK(b.lambda2 == Lambda{want.tuple.k2, den});
      CHECK(b.price == in.req.budget * (den - want.tuple.k1) / den);
      CHECK(b.margin == in.req.budget * want.tuple.k2 / den);
      break;
    }
  }
}

double score_of(const Bid& b) { return objective(*b.predicted_pcd, b.lambda1, b.lambda2); }

}  // namespace

TEST_CASE("objective") {
  CHECK(objective(0.9, 0.1, 0.2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(objective(0.5, 0.0, 1.0) == 1.5);
  CHECK(objective(0.9, Lambda{1, 10}, Lambda{2, 10}) == doctest::Approx(1.0).epsilon(1e-15));
  // Equal exact differences give identical scores.
  CHECK(objective(0.3, Lambda{1, 20}, Lambda{3, 20}) == objective(0.3, Lambda{2, 20}, Lambda{4, 20}));
}

TEST_CASE("price and margin use integer floors") {
  CHECK(bid_price(100, Lambda{1, 10}) == 90);
  CHECK(kept_margin(100, Lambda{2, 10}) == 20);
  CHECK(bid_price(7, Lambda{1, 3}) == 4);
  CHECK(kept_margin(7, Lambda{1, 3}) == 2);
  CHECK(bid_price(1, Lambda{1, 20}) == 0);
}

TEST_CASE("strategy names parse") {
  CHECK(parse_strategy_kind("bmaniac") == StrategyKind::bmaniac);
  CHECK(parse_strategy_kind("fixed_margin") == StrategyKind::fixed_margin);
  CHECK(parse_search_mode("hill_climb") == SearchMode::hill_climb);
  CHECK_THROWS_AS(parse_strategy_kind("greedy"), DomainError);
  StrategyParams p;
  p.theta1 = 1.5;
  CHECK_THROWS_AS(validate(p), DomainError);
}

TEST_CASE("theta1 = 1 forces the fallback on a cold model") {
  // 1 - 0 - 2 - 3, backbone 1, observer 0.
  const auto s = graph(4, {{0, 1}, {0, 2}, {2, 3}}, 1);
  const auto view = derive_view(s, N(0));
  NetQualityModel netq(N(0), 4);
  AuctionSuccessModel aucm(4, LambdaGrid{}, 40);
  StrategyParams p;
  p.theta1 = 1.0;
  const AuctionRequest req{1, N(1), N(3), 50, 10};
  CHECK(decide_bid(netq, aucm, req, view, p) == BidDecision{BackboneFallback{50}});

  const auto cut = derive_view(graph(4, {{0, 2}, {2, 3}}, 1), N(0));
  CHECK(decide_bid(netq, aucm, req, cut, p) == BidDecision{Abstain{}});
}

TEST_CASE("certain models pick the largest margin at full price") {
  // Observer 0, relays 1 and 2 both reach destination 3; backbone 4.
  const auto grid = LambdaGrid::from_values(std::vector<double>{0.0, 0.5, 1.0});
  NetQualityModel netq(N(0), 5, 0.0);
  for (int i = 0; i < 5; ++i) {
    netq.ingest_view(derive_view(graph(5, {{0, 4}, {0, 1}, {1, 3}}, 4), N(0)));
    netq.ingest_view(derive_view(graph(5, {{0, 4}, {0, 2}, {2, 3}}, 4), N(0)));
  }
  AuctionSuccessModel aucm(5, grid, 40, 8, 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (std::size_t j = 0; j < grid.size(); ++j) aucm.record_outcome({10, grid.at(i), grid.at(j), N(3), true});

  const auto view = derive_view(graph(5, {{0, 4}, {0, 1}, {0, 2}, {1, 3}, {2, 3}}, 4), N(0));
  StrategyParams p;
  p.grid = grid;
  const AuctionRequest req{7, N(4), N(3), 100, 10};
  const auto d = decide_bid(netq, aucm, req, view, p);
  REQUIRE(std::holds_alternative<Bid>(d));
  const auto& b = std::get<Bid>(d);
  CHECK(b.next_hop == N(1));
  CHECK(b.lambda1 == Lambda{0, 1});
  CHECK(b.lambda2 == Lambda{1, 1});
  CHECK(b.price == 100);
  CHECK(b.margin == 100);
  CHECK(*b.predicted_pcd == 1.0);
  CHECK(*b.predicted_ps == 1.0);
}

TEST_CASE("a budget of one only admits lambda1 = 0") {
  const auto view = derive_view(graph(4, {{0, 1}, {0, 2}, {2, 3}}, 1), N(0));
  NetQualityModel netq(N(0), 4);
  AuctionSuccessModel aucm(4, LambdaGrid{}, 40);
  StrategyParams p;
  p.theta1 = 0.0;
  p.theta2 = 0.0;
  const auto d = decide_bid(netq, aucm, {1, N(1), N(3), 1, 5}, view, p);
  REQUIRE(std::holds_alternative<Bid>(d));
  CHECK(std::get<Bid>(d).lambda1 == Lambda{0, 1});
  CHECK(std::get<Bid>(d).price == 1);
}

TEST_CASE("relay candidates skip the backbone and the announcer") {
  const auto view = derive_view(graph(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}}, 1), N(0));
  const auto r = relay_candidates({1, N(2), N(4), 10, 5}, view);
  CHECK(r == std::vector<NodeId>{N(3), N(4)});
}

TEST_CASE("property: exhaustive search agrees with the enumeration oracle") {
  std::mt19937_64 gen(51);
  int bids = 0, fallbacks = 0, abstains = 0;
  for (int round = 0; round < 400; ++round) {
    const auto in = random_instance(gen);
    const auto got = decide_bid(in.netq, in.aucm, in.req, in.view, in.params);
    check_matches_oracle(in, got);
    bids += std::holds_alternative<Bid>(got);
    fallbacks += std::holds_alternative<BackboneFallback>(got);
    abstains += std::holds_alternative<Abstain>(got);
  }
  // The generator covers every outcome kind.
  CHECK(bids > 50);
  CHECK(fallbacks > 10);
  CHECK(abstains > 0);
}

TEST_CASE("property: returned bids satisfy every constraint") {
  std::mt19937_64 gen(52);
  for (int round = 0; round < 300; ++round) {
    auto in = random_instance(gen);
    for (auto mode : {SearchMode::exhaustive, SearchMode::hill_climb}) {
      in.params.search = mode;
      const auto got = decide_bid(in.netq, in.aucm, in.req, in.view, in.params);
      const auto* b = std::get_if<Bid>(&got);
      if (!b) continue;
      CHECK(*b->predicted_ps >= in.params.theta1);
      CHECK(*b->predicted_pcd >= in.params.theta2);
      CHECK(b->lambda1.value() + b->lambda2.value() <= 1.0 + 1e-12);
      CHECK(b->price >= 1);
      CHECK(b->price <= in.req.budget);
      CHECK(b->margin <= b->price);
      CHECK(in.view.is_neighbor(b->next_hop));
      CHECK(b->next_hop != in.view.backbone());
      CHECK(b->next_hop != in.req.announcer);
      CHECK(in.params.grid.contains(b->lambda1));
      CHECK(in.params.grid.contains(b->lambda2));
      CHECK(*b->predicted_ps ==
            in.aucm.success_probability(in.req.timeout, b->lambda1, b->lambda2, in.req.destination));
    }
  }
}

TEST_CASE("property: raising a threshold never raises the best objective") {
  std::mt19937_64 gen(53);
  for (int round = 0; round < 300; ++round) {
    auto in = random_instance(gen);
    const auto low = decide_bid(in.netq, in.aucm, in.req, in.view, in.params);
    auto tight = in.params;
    (gen() % 2 ? tight.theta1 : tight.theta2) += 0.15;
    const auto high = decide_bid(in.netq, in.aucm, in.req, in.view, tight);
    if (const auto* h = std::get_if<Bid>(&high)) {
      const auto* l = std::get_if<Bid>(&low);
      REQUIRE(l);
      CHECK(score_of(*h) <= score_of(*l));
    }
  }
}

TEST_CASE("property: decisions are deterministic") {
  std::mt19937_64 gen(54);
  for (int round = 0; round < 100; ++round) {
    const auto in = random_instance(gen);
    CHECK(decide_bid(in.netq, in.aucm, in.req, in.view, in.params) ==
          decide_bid(in.netq, in.aucm, in.req, in.view, in.params));
  }
}

TEST_CASE("property: hill climbing finds the optimum when success is flat") {
  // theta1 = 0 and a cold auction model make every admissible pair feasible,
  // so the objective is monotone along the grid and has no local optima.
  std::mt19937_64 gen(55);
  for (int round = 0; round < 200; ++round) {
    auto in = random_instance(gen);
    in.aucm = AuctionSuccessModel(in.view.node_count(), in.params.grid, 20, 4);
    in.params.theta1 = 0.0;
    in.params.search = SearchMode::exhaustive;
    const auto ex = decide_bid(in.netq, in.aucm, in.req, in.view, in.params);
    in.params.search = SearchMode::hill_climb;
    const auto hc = decide_bid(in.netq, in.aucm, in.req, in.view, in.params);
    CHECK(ex == hc);
  }
}

TEST_CASE("property: hill climbing never beats exhaustive search") {
  std::mt19937_64 gen(56);
  for (int round = 0; round < 300; ++round) {
    auto in = random_instance(gen);
    const auto ex = decide_bid(in.netq, in.aucm, in.req, in.view, in.params);
    in.params.search = SearchMode::hill_climb;
    const auto hc = decide_bid(in.netq, in.aucm, in.req, in.view, in.params);
    // Both searches see the same feasible set, so they agree on its emptiness.
    CHECK(ex.index() == hc.index());
    if (std::holds_alternative<Bid>(ex)) CHECK(score_of(std::get<Bid>(hc)) <= score_of(std::get<Bid>(ex)));
  }
}

TEST_CASE("fixed margin baseline") {
  // 1 - 0 - 2 - 3 and 0 - 4 - 5 - 3: shortest path via 2.
  const auto view = derive_view(graph(6, {{0, 1}, {0, 2}, {2, 3}, {0, 4}, {4, 5}, {5, 3}}, 1), N(0));
  Rng rng(1);
  const AuctionRequest req{1, N(1), N(3), 100, 10};
  const auto d = baseline_decide(StrategyKind::fixed_margin, req, view, LambdaGrid{}, rng);
  REQUIRE(std::holds_alternative<Bid>(d));
  const auto& b = std::get<Bid>(d);
  CHECK(b.price == 90);
  CHECK(b.margin == 20);
  CHECK(b.next_hop == N(2));
  CHECK_FALSE(b.predicted_pcd);

  const auto lost = derive_view(graph(6, {{0, 1}, {0, 2}}, 1), N(0));
  CHECK(baseline_decide(StrategyKind::fixed_margin, req, lost, LambdaGrid{}, rng) ==
        BidDecision{BackboneFallback{100}});
}

TEST_CASE("always-backbone baseline") {
  Rng rng(1);
  const AuctionRequest req{1, N(2), N(3), 40, 10};
  const auto up = derive_view(graph(4, {{0, 1}, {0, 2}, {2, 3}}, 1), N(0));
  CHECK(baseline_decide(StrategyKind::always_backbone, req, up, LambdaGrid{}, rng) ==
        BidDecision{BackboneFallback{40}});
  const auto down = derive_view(graph(4, {{0, 2}, {2, 3}}, 1), N(0));
  CHECK(baseline_decide(StrategyKind::always_backbone, req, down, LambdaGrid{}, rng) == BidDecision{Abstain{}});
  CHECK_THROWS_AS(baseline_decide(StrategyKind::bmaniac, req, up, LambdaGrid{}, rng), DomainError);
}

TEST_CASE("property: random baseline bids are admissible and seed-determined") {
  std::mt19937_64 gen(57);
  for (int round = 0; round < 200; ++round) {
    const auto in = random_instance(gen);
    Rng a(round), b(round);
    const auto x = baseline_decide(StrategyKind::random, in.req, in.view, in.params.grid, a);
    CHECK(x == baseline_decide(StrategyKind::random, in.req, in.view, in.params.grid, b));
    if (const auto* bid = std::get_if<Bid>(&x)) {
      CHECK(bid->price >= 1);
      CHECK(bid->lambda1.value() + bid->lambda2.value() <= 1.0 + 1e-12);
      const auto r = relay_candidates(in.req, in.view);
      CHECK(std::find(r.begin(), r.end(), bid->next_hop) != r.end());
    } else {
      CHECK(relay_candidates(in.req, in.view).empty());
    }
  }
}
