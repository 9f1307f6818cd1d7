#include "bmaniac/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "bmaniac/errors.hpp"

namespace bmaniac {
namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

const std::set<std::string> kKnownFields = {
    "nodes",       "edges",        "backbone",   "ticks",         "seed",
    "p_up",        "p_down",       "packet_rate", "budget_min",   "budget_max",
    "timeout_min", "timeout_max",  "packets",    "strategy",      "theta1",
    "theta2",      "search",       "agents",     "alpha",         "window",
    "lambda_step", "lambda_grid",  "timeout_bins", "fine_factor", "backbone_fee_factor",
};

void require_probability(double value, const std::string& field) {
  if (!(value >= 0.0 && value <= 1.0)) throw ConfigError(field, "must lie in [0, 1]");
}

const Json& required(const Json& doc, const std::string& field) {
  const auto it = doc.find(field);
  if (it == doc.end()) throw ConfigError(field, "missing required field");
  return *it;
}

std::uint64_t as_uint(const Json& value, const std::string& field) {
  if (value.is_number_unsigned()) return value.get<std::uint64_t>();
  if (value.is_number_integer() && value.get<std::int64_t>() >= 0) return value.get<std::uint64_t>();
  throw ConfigError(field, "must be a non-negative whole number");
}

double as_double(const Json& value, const std::string& field) {
  if (!value.is_number()) throw ConfigError(field, "must be a number");
  return value.get<double>();
}

std::string as_string(const Json& value, const std::string& field) {
  if (!value.is_string()) throw ConfigError(field, "must be a string");
  return value.get<std::string>();
}

template <typename T, typename Parse>
void optional_field(const Json& doc, const std::string& field, T& target, Parse parse) {
  if (const auto it = doc.find(field); it != doc.end()) target = parse(*it, field);
}

StrategyKind as_strategy(const Json& value, const std::string& field) {
  try {
    return parse_strategy_kind(as_string(value, field));
  } catch (const DomainError& e) {
    throw ConfigError(field, e.what());
  }
}

SearchMode as_search(const Json& value, const std::string& field) {
  try {
    return parse_search_mode(as_string(value, field));
  } catch (const DomainError& e) {
    throw ConfigError(field, e.what());
  }
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_atomically(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

StrategyKind ScenarioConfig::strategy_for(NodeId node) const {
  for (const auto& o : agents) {
    if (o.node == node && o.strategy) return *o.strategy;
  }
  return strategy;
}

StrategyParams ScenarioConfig::params_for(NodeId node) const {
  StrategyParams p;
  p.theta1 = theta1;
  p.theta2 = theta2;
  p.search = search;
  p.grid = lambda_grid;
  for (const auto& o : agents) {
    if (o.node != node) continue;
    if (o.theta1) p.theta1 = *o.theta1;
    if (o.theta2) p.theta2 = *o.theta2;
    if (o.search) p.search = *o.search;
  }
  return p;
}

void validate(const ScenarioConfig& c) {
  if (c.node_count < 2) throw ConfigError("nodes", "at least two nodes are required");
  if (to_index(c.backbone) >= c.node_count) throw ConfigError("backbone", "not a listed node");
  try {
    if (normalize_edges(c.edges, c.node_count) != c.edges) throw ConfigError("edges", "not normalized");
  } catch (const DomainError& e) {
    throw ConfigError("edges", e.what());
  }
  require_probability(c.p_up, "p_up");
  require_probability(c.p_down, "p_down");
  if (!(c.packet_rate >= 0.0) || !std::isfinite(c.packet_rate)) throw ConfigError("packet_rate", "must be >= 0");
  if (c.budget_min < 1) throw ConfigError("budget_min", "must be >= 1");
  if (c.budget_max < c.budget_min) throw ConfigError("budget_max", "must be >= budget_min");
  if (c.timeout_min < 1) throw ConfigError("timeout_min", "must be >= 1");
  if (c.timeout_max < c.timeout_min) throw ConfigError("timeout_max", "must be >= timeout_min");
  for (const auto& p : c.packets) {
    if (p.tick < 1) throw ConfigError("packets", "tick must be >= 1");
    if (to_index(p.destination) >= c.node_count || p.destination == c.backbone) {
      throw ConfigError("packets", "destination must be a non-backbone node");
    }
    if (p.budget < 1 || p.budget > c.budget_max) throw ConfigError("packets", "budget must lie in [1, budget_max]");
    if (p.timeout < 1 || p.timeout > c.timeout_max) {
      throw ConfigError("packets", "timeout must lie in [1, timeout_max]");
    }
  }
  require_probability(c.theta1, "theta1");
  require_probability(c.theta2, "theta2");
  for (std::size_t i = 0; i < c.agents.size(); ++i) {
    const auto& o = c.agents[i];
    if (to_index(o.node) >= c.node_count || o.node == c.backbone) {
      throw ConfigError("agents", "override for non-agent node " + to_string(o.node));
    }
    if (i > 0 && !(c.agents[i - 1].node < o.node)) throw ConfigError("agents", "overrides must be unique and sorted");
    if (o.theta1) require_probability(*o.theta1, "agents.theta1");
    if (o.theta2) require_probability(*o.theta2, "agents.theta2");
  }
  if (!(c.alpha >= 0.0) || !std::isfinite(c.alpha)) throw ConfigError("alpha", "must be >= 0");
  if (c.window && *c.window < 1) throw ConfigError("window", "must be >= 1");
  if (c.timeout_bins < 1) throw ConfigError("timeout_bins", "must be >= 1");
  if (!(c.fine_factor >= 0.0)) throw ConfigError("fine_factor", "must be >= 0");
  if (!(c.backbone_fee_factor >= 0.0)) throw ConfigError("backbone_fee_factor", "must be >= 0");
}

ScenarioConfig parse_scenario(std::string_view json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("document", e.what());
  }
  if (!doc.is_object()) throw ConfigError("document", "scenario must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (!kKnownFields.contains(key)) throw ConfigError(key, "unknown field");
  }

  ScenarioConfig c;
  // Required fields, checked in a fixed order.
  const auto& nodes = required(doc, "nodes");
  const auto& edges = required(doc, "edges");
  const auto& backbone = required(doc, "backbone");
  const auto& ticks = required(doc, "ticks");
  const auto& seed = required(doc, "seed");

  if (!nodes.is_array()) throw ConfigError("nodes", "must be an array of node ids");
  std::vector<std::uint64_t> ids;
  for (const auto& n : nodes) ids.push_back(as_uint(n, "nodes"));
  std::sort(ids.begin(), ids.end());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] != i) throw ConfigError("nodes", "node ids must be exactly 0 .. N-1");
  }
  c.node_count = ids.size();

  if (!edges.is_array()) throw ConfigError("edges", "must be an array of [a, b] pairs");
  for (const auto& e : edges) {
    if (!e.is_array() || e.size() != 2) throw ConfigError("edges", "each edge must be [a, b]");
    const auto a = as_uint(e[0], "edges");
    const auto b = as_uint(e[1], "edges");
    if (a >= c.node_count || b >= c.node_count) throw ConfigError("edges", "endpoint is not a node");
    c.edges.push_back(Edge{NodeId{static_cast<std::uint32_t>(a)}, NodeId{static_cast<std::uint32_t>(b)}});
  }
  try {
    c.edges = normalize_edges(std::move(c.edges), c.node_count);
  } catch (const DomainError& e) {
    throw ConfigError("edges", e.what());
  }
  const auto backbone_id = as_uint(backbone, "backbone");
  if (backbone_id >= c.node_count) throw ConfigError("backbone", "not a listed node");
  c.backbone = NodeId{static_cast<std::uint32_t>(backbone_id)};
  c.ticks = as_uint(ticks, "ticks");
  c.seed = as_uint(seed, "seed");

  optional_field(doc, "p_up", c.p_up, as_double);
  optional_field(doc, "p_down", c.p_down, as_double);
  optional_field(doc, "packet_rate", c.packet_rate, as_double);
  const auto as_money = [](const Json& v, const std::string& f) { return static_cast<Money>(as_uint(v, f)); };
  const auto as_u32 = [](const Json& v, const std::string& f) {
    const auto x = as_uint(v, f);
    if (x > 0xffffffffULL) throw ConfigError(f, "too large");
    return static_cast<std::uint32_t>(x);
  };
  optional_field(doc, "budget_min", c.budget_min, as_money);
  optional_field(doc, "budget_max", c.budget_max, as_money);
  optional_field(doc, "timeout_min", c.timeout_min, as_u32);
  optional_field(doc, "timeout_max", c.timeout_max, as_u32);

  if (const auto it = doc.find("packets"); it != doc.end()) {
    if (!it->is_array()) throw ConfigError("packets", "must be an array");
    for (const auto& p : *it) {
      if (!p.is_object()) throw ConfigError("packets", "each packet must be an object");
      ScriptedPacket packet;
      packet.tick = as_uint(required(p, "tick"), "packets.tick");
      packet.destination = NodeId{as_u32(required(p, "destination"), "packets.destination")};
      packet.budget = as_money(required(p, "budget"), "packets.budget");
      packet.timeout = as_u32(required(p, "timeout"), "packets.timeout");
      c.packets.push_back(packet);
    }
  }

  optional_field(doc, "strategy", c.strategy, as_strategy);
  optional_field(doc, "theta1", c.theta1, as_double);
  optional_field(doc, "theta2", c.theta2, as_double);
  optional_field(doc, "search", c.search, as_search);

  if (const auto it = doc.find("agents"); it != doc.end()) {
    if (!it->is_array()) throw ConfigError("agents", "must be an array");
    for (const auto& a : *it) {
      if (!a.is_object()) throw ConfigError("agents", "each override must be an object");
      for (const auto& [key, _] : a.items()) {
        if (key != "node" && key != "strategy" && key != "theta1" && key != "theta2" && key != "search") {
          throw ConfigError("agents." + key, "unknown field");
        }
      }
      AgentOverride o;
      o.node = NodeId{as_u32(required(a, "node"), "agents.node")};
      if (a.contains("strategy")) o.strategy = as_strategy(a["strategy"], "agents.strategy");
      if (a.contains("theta1")) o.theta1 = as_double(a["theta1"], "agents.theta1");
      if (a.contains("theta2")) o.theta2 = as_double(a["theta2"], "agents.theta2");
      if (a.contains("search")) o.search = as_search(a["search"], "agents.search");
      c.agents.push_back(o);
    }
    std::sort(c.agents.begin(), c.agents.end(),
              [](const AgentOverride& x, const AgentOverride& y) { return x.node < y.node; });
  }

  optional_field(doc, "alpha", c.alpha, as_double);
  if (const auto it = doc.find("window"); it != doc.end() && !it->is_null()) {
    c.window = static_cast<std::size_t>(as_uint(*it, "window"));
  }
  if (doc.contains("lambda_step") && doc.contains("lambda_grid")) {
    throw ConfigError("lambda_grid", "give either lambda_step or lambda_grid, not both");
  }
  try {
    if (const auto it = doc.find("lambda_step"); it != doc.end()) {
      c.lambda_grid = LambdaGrid::from_step(as_double(*it, "lambda_step"));
    }
    if (const auto it = doc.find("lambda_grid"); it != doc.end()) {
      if (!it->is_array()) throw ConfigError("lambda_grid", "must be an array of numbers");
      std::vector<double> values;
      for (const auto& v : *it) values.push_back(as_double(v, "lambda_grid"));
      c.lambda_grid = LambdaGrid::from_values(values);
    }
  } catch (const DomainError& e) {
    throw ConfigError(doc.contains("lambda_step") ? "lambda_step" : "lambda_grid", e.what());
  }
  optional_field(doc, "timeout_bins", c.timeout_bins, as_u32);
  optional_field(doc, "fine_factor", c.fine_factor, as_double);
  optional_field(doc, "backbone_fee_factor", c.backbone_fee_factor, as_double);

  validate(c);
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("scenario", "cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str());
}

nlohmann::ordered_json emit_scenario(const ScenarioConfig& c) {
  OrderedJson j;
  OrderedJson nodes = OrderedJson::array();
  for (std::size_t i = 0; i < c.node_count; ++i) nodes.push_back(i);
  j["nodes"] = std::move(nodes);
  OrderedJson edges = OrderedJson::array();
  for (const auto& e : c.edges) edges.push_back({to_index(e.a), to_index(e.b)});
  j["edges"] = std::move(edges);
  j["backbone"] = to_index(c.backbone);
  j["ticks"] = c.ticks;
  j["seed"] = c.seed;
  j["p_up"] = c.p_up;
  j["p_down"] = c.p_down;
  j["packet_rate"] = c.packet_rate;
  j["budget_min"] = c.budget_min;
  j["budget_max"] = c.budget_max;
  j["timeout_min"] = c.timeout_min;
  j["timeout_max"] = c.timeout_max;
  OrderedJson packets = OrderedJson::array();
  for (const auto& p : c.packets) {
    OrderedJson row;
    row["tick"] = p.tick;
    row["destination"] = to_index(p.destination);
    row["budget"] = p.budget;
    row["timeout"] = p.timeout;
    packets.push_back(std::move(row));
  }
  j["packets"] = std::move(packets);
  j["strategy"] = std::string(to_string(c.strategy));
  j["theta1"] = c.theta1;
  j["theta2"] = c.theta2;
  j["search"] = std::string(to_string(c.search));
  OrderedJson agents = OrderedJson::array();
  for (const auto& o : c.agents) {
    OrderedJson row;
    row["node"] = to_index(o.node);
    if (o.strategy) row["strategy"] = std::string(to_string(*o.strategy));
    if (o.theta1) row["theta1"] = *o.theta1;
    if (o.theta2) row["theta2"] = *o.theta2;
    if (o.search) row["search"] = std::string(to_string(*o.search));
    agents.push_back(std::move(row));
  }
  j["agents"] = std::move(agents);
  j["alpha"] = c.alpha;
  j["window"] = c.window ? OrderedJson(*c.window) : OrderedJson(nullptr);
  j["lambda_grid"] = c.lambda_grid.values();
  j["timeout_bins"] = c.timeout_bins;
  j["fine_factor"] = c.fine_factor;
  j["backbone_fee_factor"] = c.backbone_fee_factor;
  return j;
}

std::string config_hash(const ScenarioConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(emit_scenario(config).dump())));
  return buf;
}

void apply_strategy_override(ScenarioConfig& config, StrategyKind kind) {
  config.strategy = kind;
  for (auto& o : config.agents) o.strategy.reset();
}

namespace {

MetricsReport run_to_directory(const ScenarioConfig& config, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto trace_path = out_dir / kTraceFile;
  auto trace_tmp = trace_path;
  trace_tmp += ".tmp";
  Simulation sim(config);
  {
    std::ofstream trace(trace_tmp, std::ios::binary | std::ios::trunc);
    if (!trace) throw std::runtime_error("cannot open " + trace_tmp.string() + " for writing");
    for (std::uint64_t t = 0; t < config.ticks; ++t) {
      for (const auto& e : sim.advance()) trace << e.to_json_line() << '\n';
    }
    if (!trace) throw std::runtime_error("write failed for " + trace_tmp.string());
  }
  std::filesystem::rename(trace_tmp, trace_path);

  auto report = sim.metrics();
  report.config_hash = config_hash(config);
  write_atomically(out_dir / kMetricsFile, report.to_csv());
  write_atomically(out_dir / kModelsFile, sim.serialize_models());
  auto summary = report.to_json();
  summary["config"] = emit_scenario(config);
  write_atomically(out_dir / kSummaryFile, summary.dump(2) + "\n");
  return report;
}

}  // namespace

int run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_dir, std::ostream& err) {
  try {
    run_to_directory(config, out_dir);
    return 0;
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << '\n';
    return 1;
  }
}

std::vector<MetricsReport> sweep_reports(const ScenarioConfig& config, std::span<const std::uint64_t> seeds,
                                         unsigned threads) {
  std::vector<MetricsReport> reports(seeds.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, seeds.size())));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (auto i = next++; i < seeds.size(); i = next++) {
      try {
        auto c = config;
        c.seed = seeds[i];
        reports[i] = run(c, EventSink{});
        reports[i].config_hash = config_hash(c);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return reports;
}

MeanSd mean_sd(std::span<const double> values) {
  MeanSd out;
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return out;
}

std::string sweep_metrics_csv(std::span<const MetricsReport> reports) {
  std::ostringstream out;
  out << "seed," << MetricsReport::kCsvHeader << '\n';
  for (const auto& r : reports) {
    std::istringstream rows(r.to_csv());
    std::string line;
    std::getline(rows, line);  // header
    while (std::getline(rows, line)) out << r.seed << ',' << line << '\n';
  }
  return out.str();
}

std::string sweep_summary_csv(std::span<const MetricsReport> reports) {
  struct Series {
    std::vector<double> profit, delivery, win, fallback, gap;
  };
  // Keyed by (strategy, agent label); "all" rows aggregate a strategy.
  std::map<std::pair<std::string, std::string>, Series> series;
  std::vector<std::pair<std::string, std::string>> order;
  const auto slot = [&](std::string strategy, std::string agent) -> Series& {
    auto key = std::make_pair(std::move(strategy), std::move(agent));
    if (!series.contains(key)) order.push_back(key);
    return series[key];
  };
  std::vector<double> network;
  for (const auto& r : reports) {
    network.push_back(r.packet_delivery_ratio());
    for (const auto& a : r.agents) {
      auto& s = slot(std::string(to_string(a.strategy)), std::to_string(to_index(a.node)));
      s.profit.push_back(static_cast<double>(a.profit));
      s.delivery.push_back(a.delivery_ratio());
      s.win.push_back(a.win_rate());
      s.fallback.push_back(a.fallback_frequency());
      if (const auto g = a.calibration_gap()) s.gap.push_back(*g);
    }
    for (const auto& st : r.strategies) {
      auto& s = slot(std::string(to_string(st.strategy)), "all");
      s.profit.push_back(st.mean_profit());
      s.delivery.push_back(st.delivery_ratio());
      s.win.push_back(st.win_rate());
      s.fallback.push_back(st.fallback_frequency());
      if (const auto g = st.calibration_gap()) s.gap.push_back(*g);
    }
  }
  std::ostringstream out;
  out << "strategy,agent,seeds,profit_mean,profit_sd,delivery_ratio_mean,delivery_ratio_sd,"
         "win_rate_mean,win_rate_sd,fallback_frequency_mean,fallback_frequency_sd,"
         "calibration_gap_mean,calibration_gap_sd\n";
  const auto cells = [](const std::vector<double>& v) {
    if (v.empty()) return std::string("NA,NA");
    const auto m = mean_sd(v);
    return format_number(m.mean) + ',' + format_number(m.sd);
  };
  for (const auto& key : order) {
    const auto& s = series.at(key);
    out << key.first << ',' << key.second << ',' << s.profit.size() << ',' << cells(s.profit) << ','
        << cells(s.delivery) << ',' << cells(s.win) << ',' << cells(s.fallback) << ',' << cells(s.gap)
        << '\n';
  }
  const auto net = mean_sd(network);
  out << "network,packets," << reports.size() << ",NA,NA," << format_number(net.mean) << ','
      << format_number(net.sd) << ",NA,NA,NA,NA,NA,NA\n";
  return out.str();
}

int run_sweep(const ScenarioConfig& config, unsigned n_seeds, const std::filesystem::path& out_dir,
              std::ostream& err) {
  if (n_seeds == 0) {
    err << "sweep needs at least one seed\n";
    return 1;
  }
  std::vector<MetricsReport> reports(n_seeds);
  std::vector<std::string> failures(n_seeds);
  std::atomic<unsigned> next{0};
  auto worker = [&] {
    for (auto i = next++; i < n_seeds; i = next++) {
      auto c = config;
      c.seed = i + 1;
      try {
        reports[i] = run_to_directory(c, out_dir / ("seed_" + std::to_string(i + 1)));
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  const auto threads = std::min(n_seeds, std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (unsigned i = 0; i < n_seeds; ++i) {
    if (!failures[i].empty()) {
      err << "seed " << i + 1 << " failed: " << failures[i] << '\n';
      return 1;
    }
  }
  try {
    write_atomically(out_dir / "sweep_metrics.csv", sweep_metrics_csv(reports));
    write_atomically(out_dir / "sweep_summary.csv", sweep_summary_csv(reports));
  } catch (const std::exception& e) {
    err << "sweep aggregation failed: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace bmaniac
