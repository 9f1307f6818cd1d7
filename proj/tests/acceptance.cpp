// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Criterion 9 is a report with no threshold; it fails only if the
// sweeps cannot run or exceed their time budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bmaniac/engine.hpp"
#include "bmaniac/errors.hpp"
#include "bmaniac/scenario.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace bmaniac;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

fs::path g_data_dir;

ScenarioConfig mesh20() { return load_scenario(g_data_dir / "mesh20.json"); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// 1. Naive Bayes posterior vs full-joint enumeration.
Verdict nb_oracle() {
  std::mt19937_64 gen(1001);
  double worst = 0.0;
  std::size_t tables = 0, queries = 0, mismatches = 0;
  for (int round = 0; round < 600; ++round) {
    const double alpha = round % 2 ? 1.0 : 0.0;
    auto rt = testgen::random_table(gen, 4, 5, alpha, false);
    ++tables;
    for (int q = 0; q < 4; ++q) {
      Evidence e;
      const auto ev = testgen::random_evidence(gen, rt.spec, e);
      for (std::size_t c = 0; c < rt.spec.classes; ++c) {
        ++queries;
        const auto want = oracle::posterior(rt.spec, rt.retained(), c, ev);
        try {
          const double got = rt.table.posterior(c, e);
          if (!want) {
            ++mismatches;
            continue;
          }
          worst = std::max(worst, std::abs(got - *want));
        } catch (const IndeterminatePosterior&) {
          if (want) ++mismatches;
        }
      }
    }
  }
  return {mismatches == 0 && worst <= 1e-12,
          std::to_string(tables) + " tables, " + std::to_string(queries) + " queries, max |d| = " +
              fmt("%.3g", worst) + ", indeterminacy mismatches = " + std::to_string(mismatches)};
}

// 2. Literal Bayes ratio: hand example and single-feature agreement.
Verdict literal_form() {
  FrequencyTable t({"C", "notC"}, {FeatureSpec{"f", {"A", "B"}}, FeatureSpec{"h", {"2", "3"}}}, 0.0);
  for (int i = 0; i < 40; ++i) t.observe("C", t.evidence({{"f", i < 20 ? "A" : "B"}, {"h", i < 16 ? "2" : "3"}}));
  for (int i = 0; i < 10; ++i) t.observe("notC", t.evidence({{"f", i < 5 ? "A" : "B"}, {"h", i < 9 ? "2" : "3"}}));
  const double hand = t.posterior_literal(0, t.evidence({{"f", "A"}, {"h", "2"}}));
  const double hand_err = std::abs(hand - 0.64);

  std::mt19937_64 gen(1002);
  double worst = 0.0;
  for (int round = 0; round < 1000; ++round) {
    auto rt = testgen::random_table(gen, 4, 5, 1.0, false);
    const auto f = std::uniform_int_distribution<std::size_t>(0, rt.spec.domains.size() - 1)(gen);
    const auto v = std::uniform_int_distribution<std::size_t>(0, rt.spec.domains[f] - 1)(gen);
    const auto e = Evidence{}.set(f, v);
    for (std::size_t c = 0; c < rt.spec.classes; ++c) {
      worst = std::max(worst, std::abs(rt.table.posterior_literal(c, e) - rt.table.posterior(c, e)));
    }
  }
  return {hand_err <= 1e-15 && worst <= 1e-12,
          "hand example " + fmt("%.17g", hand) + " (|d| = " + fmt("%.3g", hand_err) +
              "), 1000 single-feature tables max |d| = " + fmt("%.3g", worst)};
}

// 3. decide_bid vs sort over every enumerated tuple.
Verdict optimizer_oracle() {
  std::mt19937_64 gen(1003);
  int agree = 0, bids = 0;
  const int n = 100;
  for (int round = 0; round < n; ++round) {
    const auto in = testgen::random_instance(gen);
    const auto got = decide_bid(in.netq, in.aucm, in.req, in.view, in.params);
    const auto want = oracle::best_bid(in.netq, in.aucm, in.req, in.view, in.params);
    bool same = false;
    switch (want.kind) {
      case oracle::OracleDecision::Kind::abstain:
        same = std::holds_alternative<Abstain>(got);
        break;
      case oracle::OracleDecision::Kind::fallback:
        same = got == BidDecision{BackboneFallback{in.req.budget}};
        break;
      case oracle::OracleDecision::Kind::bid:
        if (const auto* b = std::get_if<Bid>(&got)) {
          const auto den = in.params.grid.denominator();
          same = b->next_hop == want.tuple.f && b->lambda1 == Lambda{want.tuple.k1, den} &&
                 b->lambda2 == Lambda{want.tuple.k2, den};
          ++bids;
        }
        break;
    }
    agree += same;
  }
  return {agree == n, std::to_string(agree) + "/" + std::to_string(n) + " identical decisions (" +
                          std::to_string(bids) + " of them bids)"};
}

// 4. theta1 = 1 with alpha = 1 always falls back when the backbone is reachable.
Verdict fallback_rule() {
  std::mt19937_64 gen(1004);
  int fallbacks = 0, tried = 0;
  while (tried < 100) {
    auto in = testgen::random_instance(gen);
    if (!in.view.reachable(in.view.backbone())) continue;
    in.params.theta1 = 1.0;
    ++tried;
    if (decide_bid(in.netq, in.aucm, in.req, in.view, in.params) == BidDecision{BackboneFallback{in.req.budget}}) {
      ++fallbacks;
    }
  }
  return {fallbacks == 100, std::to_string(fallbacks) + "/100 decisions were BackboneFallback{b}"};
}

// 5. Ledger identity after every settlement, recomputed from the trace.
Verdict ledger_conservation() {
  auto config = mesh20();
  config.ticks = 10000;
  std::map<std::uint32_t, Money> balances;
  Money injected = 0, fines = 0;
  std::uint64_t settlements = 0, violations = 0;
  run(config, [&](const SimEvent& e) {
    if (e.kind != EventKind::settled) return;
    const auto j = nlohmann::json::parse(e.to_json_line());
    for (const auto& t : j["transfers"]) balances[t["node"].get<std::uint32_t>()] += t["amount"].get<Money>();
    injected += j["injected"].get<Money>();
    fines += j["fine"].get<Money>();
    Money sum = 0;
    for (const auto& [node, b] : balances) sum += b;
    ++settlements;
    if (sum - injected + fines != 0) ++violations;
    if (j["sum_balances"].get<Money>() - j["total_injected"].get<Money>() + j["total_fines"].get<Money>() != 0) {
      ++violations;
    }
    if (j["sum_balances"].get<Money>() != sum) ++violations;
  });
  return {settlements > 1000 && violations == 0,
          std::to_string(settlements) + " settlements over 10000 ticks, 20 nodes, 4 strategies; " +
              std::to_string(violations) + " violations"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 6. Byte-identical traces for identical config and seed.
Verdict determinism() {
  auto config = mesh20();
  config.ticks = 3000;
  const auto root = fs::temp_directory_path() / "bmaniac_acceptance_determinism";
  fs::remove_all(root);
  std::ostringstream err;
  if (run_scenario(config, root / "a", err) != 0 || run_scenario(config, root / "b", err) != 0) {
    return {false, "run failed: " + err.str()};
  }
  const auto a = slurp(root / "a" / kTraceFile);
  const auto b = slurp(root / "b" / kTraceFile);
  config.seed += 1;
  run_scenario(config, root / "c", err);
  const bool differs = slurp(root / "c" / kTraceFile) != a;
  fs::remove_all(root);
  return {!a.empty() && a == b && differs,
          std::to_string(a.size()) + "-byte traces " + (a == b ? "identical" : "DIFFER") +
              "; another seed " + (differs ? "changes" : "does NOT change") + " the trace"};
}

// 7. Learned reachability prior vs empirical reachability frequency.
Verdict calibration() {
  auto config = mesh20();
  config.packet_rate = 0.0;
  config.ticks = 50000;
  config.p_up = 0.3;
  config.p_down = 0.1;
  Simulation sim(config);
  const auto agents = sim.agents();
  const auto n = config.node_count;
  std::vector<std::vector<std::uint64_t>> reach(n, std::vector<std::uint64_t>(n, 0));
  for (std::uint64_t t = 0; t < config.ticks; ++t) {
    sim.advance();
    for (const auto a : agents) {
      const auto hops = bfs_hops(sim.snapshot(), a);
      for (std::size_t d = 0; d < n; ++d) reach[to_index(a)][d] += hops[d].has_value();
    }
  }
  double worst = 0.0, lo = 1.0, hi = 0.0;
  for (const auto a : agents) {
    const auto& model = sim.net_quality(a);
    for (const auto d : model.destinations()) {
      const double freq = static_cast<double>(reach[to_index(a)][to_index(d)]) / static_cast<double>(config.ticks);
      const double prior = model.table(d).prior(NetQualityModel::kReachable);
      worst = std::max(worst, std::abs(prior - freq));
      lo = std::min(lo, freq);
      hi = std::max(hi, freq);
    }
  }
  return {worst <= 0.02, std::to_string(agents.size() * (n - 1)) + " (agent, destination) pairs over 50000 snapshots, "
                             "empirical reachability in [" + fmt("%.3f", lo) + ", " + fmt("%.3f", hi) +
                             "], max |prior - freq| = " + fmt("%.2g", worst)};
}

// 8. Long-run up-edge fraction.
Verdict stationarity() {
  const auto config = mesh20();
  const ChurnParams params{0.1, 0.3, 8};
  Rng rng(derive_seed(8, 0));
  TopologySnapshot s;
  s.node_count = config.node_count;
  s.backbone = config.backbone;
  s.edges = config.edges;
  std::uint64_t up = 0;
  const std::uint64_t ticks = 100000;
  for (std::uint64_t t = 0; t < ticks; ++t) {
    s = step_churn(s, config.edges, params, rng);
    up += s.edges.size();
  }
  const double frac = static_cast<double>(up) / static_cast<double>(ticks * config.edges.size());
  const double want = params.p_up / (params.p_up + params.p_down);
  return {std::abs(frac - want) <= 0.02, std::to_string(config.edges.size()) + " edges x 100000 ticks: up fraction " +
                                             fmt("%.4f", frac) + " vs " + fmt("%.4f", want)};
}

// 9. Comparative report.
Verdict comparative_report() {
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t k = 1; k <= 10; ++k) seeds.push_back(k);
  std::printf("  strategy         mean profit/agent (sd)    delivery ratio (sd)   packet delivery ratio\n");
  for (auto kind : {StrategyKind::bmaniac, StrategyKind::random, StrategyKind::fixed_margin,
                    StrategyKind::always_backbone}) {
    auto config = mesh20();
    config.ticks = 3000;
    apply_strategy_override(config, kind);
    const auto reports = sweep_reports(config, seeds);
    std::vector<double> profit, delivery, pdr;
    for (const auto& r : reports) {
      const auto* s = r.strategy(kind);
      profit.push_back(s->mean_profit());
      delivery.push_back(s->delivery_ratio());
      pdr.push_back(r.packet_delivery_ratio());
    }
    const auto p = mean_sd(profit), d = mean_sd(delivery), q = mean_sd(pdr);
    std::printf("  %-16s %10.1f (%7.1f)        %6.3f (%5.3f)        %6.3f\n", std::string(to_string(kind)).c_str(),
                p.mean, p.sd, d.mean, d.sd, q.mean);
  }
  std::printf("  bmaniac session length   profit/agent/1000 ticks   win rate   fallback freq   calibration gap\n");
  for (std::uint64_t ticks : {300u, 10000u}) {
    auto config = mesh20();
    config.ticks = ticks;
    apply_strategy_override(config, StrategyKind::bmaniac);
    const auto reports = sweep_reports(config, seeds);
    std::vector<double> rate, win, fb, gap;
    for (const auto& r : reports) {
      const auto* s = r.strategy(StrategyKind::bmaniac);
      rate.push_back(s->mean_profit() * 1000.0 / static_cast<double>(ticks));
      win.push_back(s->win_rate());
      fb.push_back(s->fallback_frequency());
      if (const auto g = s->calibration_gap()) gap.push_back(*g);
    }
    std::printf("  %6llu ticks              %10.1f                %6.3f     %6.3f          %6.3f\n",
                static_cast<unsigned long long>(ticks), mean_sd(rate).mean, mean_sd(win).mean, mean_sd(fb).mean,
                mean_sd(gap).mean);
  }
  return {true, "10-seed sweeps per strategy and short vs long B-Maniac sessions reported above"};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;  // 0 = no runtime bound
  std::function<Verdict()> check;
};

}  // namespace

int main(int argc, char** argv) {
  g_data_dir = argc > 1 ? fs::path(argv[1]) : fs::path(BMANIAC_TEST_DATA);
  const std::vector<Criterion> criteria{
      {1, "naive Bayes posterior matches full-joint enumeration", 10.0, nb_oracle},
      {2, "literal Bayes ratio", 0.0, literal_form},
      {3, "bid optimizer matches brute-force argmax", 5.0, optimizer_oracle},
      {4, "theta1 = 1 forces the backbone fallback", 0.0, fallback_rule},
      {5, "ledger conservation after every settlement", 60.0, ledger_conservation},
      {6, "deterministic traces", 0.0, determinism},
      {7, "reachability prior calibration", 0.0, calibration},
      {8, "churn stationarity", 0.0, stationarity},
      {9, "comparative strategy report", 300.0, comparative_report},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.budget_seconds == 0.0 || secs < c.budget_seconds;
    const bool pass = v.pass && in_time;
    failures += !pass;
    std::printf("%s criterion %d (%s): %s [%.2f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(), secs,
                in_time ? "" : ", over time budget");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
