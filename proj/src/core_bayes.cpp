#include "bmaniac/core_bayes.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <sstream>

#include "bmaniac/errors.hpp"

namespace bmaniac {
namespace {

void check_label(std::string_view label) {
  if (label.empty() || label.find_first_of("\t\n\r") != std::string_view::npos) {
    throw DomainError("label must be non-empty and free of tabs and newlines: '" +
                      std::string(label) + "'");
  }
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::uint64_t parse_count(std::string_view s) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DomainError("malformed count '" + std::string(s) + "'");
  }
  return value;
}

}  // namespace

FrequencyTable::FrequencyTable(std::vector<std::string> class_values,
                               std::vector<FeatureSpec> features, double alpha,
                               std::optional<std::size_t> window)
    : class_values_(std::move(class_values)),
      features_(std::move(features)),
      alpha_(alpha),
      window_(window) {
  if (class_values_.empty()) throw DomainError("a table needs at least one class value");
  if (!(alpha_ >= 0.0)) throw DomainError("alpha must be >= 0");
  if (window_ && *window_ == 0) throw DomainError("window must be >= 1");
  for (const auto& c : class_values_) check_label(c);
  for (std::size_t i = 0; i < class_values_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (class_values_[i] == class_values_[j]) throw DomainError("duplicate class value " + class_values_[i]);
    }
  }
  for (std::size_t i = 0; i < features_.size(); ++i) {
    const auto& f = features_[i];
    check_label(f.name);
    check_label(f.absent_label);
    for (const auto& v : f.values) {
      check_label(v);
      if (v == f.absent_label) throw DomainError("feature " + f.name + " lists its ABSENT label as a value");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (features_[j].name == f.name) throw DomainError("duplicate feature " + f.name);
    }
  }
  class_totals_.assign(class_values_.size(), 0);
  feature_counts_.reserve(features_.size());
  for (std::size_t f = 0; f < features_.size(); ++f) {
    feature_counts_.emplace_back(class_values_.size() * domain_size(f), 0);
  }
}

std::size_t FrequencyTable::domain_size(std::size_t feature) const {
  if (feature >= features_.size()) throw DomainError("unknown feature index");
  return features_[feature].values.size() + 1;
}

std::size_t FrequencyTable::absent_index(std::size_t feature) const {
  return domain_size(feature) - 1;
}

std::size_t FrequencyTable::class_index(std::string_view label) const {
  for (std::size_t c = 0; c < class_values_.size(); ++c) {
    if (class_values_[c] == label) return c;
  }
  throw DomainError("unknown class value '" + std::string(label) + "'");
}

std::size_t FrequencyTable::feature_index(std::string_view name) const {
  for (std::size_t f = 0; f < features_.size(); ++f) {
    if (features_[f].name == name) return f;
  }
  throw DomainError("unknown feature '" + std::string(name) + "'");
}

std::size_t FrequencyTable::value_index(std::size_t feature, std::string_view label) const {
  const auto& spec = features_.at(feature);
  if (label == spec.absent_label) return spec.values.size();
  for (std::size_t v = 0; v < spec.values.size(); ++v) {
    if (spec.values[v] == label) return v;
  }
  throw DomainError("value '" + std::string(label) + "' not in domain of " + spec.name);
}

const std::string& FrequencyTable::class_label(std::size_t c) const {
  check_class(c);
  return class_values_[c];
}

const std::string& FrequencyTable::feature_name(std::size_t feature) const {
  if (feature >= features_.size()) throw DomainError("unknown feature index");
  return features_[feature].name;
}

const std::string& FrequencyTable::value_label(std::size_t feature, std::size_t value) const {
  check_value(feature, value);
  const auto& spec = features_[feature];
  return value == spec.values.size() ? spec.absent_label : spec.values[value];
}

Evidence FrequencyTable::evidence(
    std::initializer_list<std::pair<std::string_view, std::string_view>> items) const {
  Evidence e;
  for (const auto& [name, label] : items) {
    const auto f = feature_index(name);
    e.set(f, value_index(f, label));
  }
  return e;
}

void FrequencyTable::check_class(std::size_t c) const {
  if (c >= class_values_.size()) throw DomainError("class index out of domain");
}

void FrequencyTable::check_value(std::size_t feature, std::size_t value) const {
  if (value >= domain_size(feature)) {
    throw DomainError("value index out of domain of " + features_[feature].name);
  }
}

void FrequencyTable::check_evidence(const Evidence& evidence) const {
  for (std::size_t i = 0; i < evidence.assignments.size(); ++i) {
    const auto [f, v] = evidence.assignments[i];
    check_value(f, v);
    for (std::size_t j = 0; j < i; ++j) {
      if (evidence.assignments[j].first == f) {
        throw DomainError("feature " + features_[f].name + " assigned twice");
      }
    }
  }
}

std::size_t FrequencyTable::slot(std::size_t feature, std::size_t value, std::size_t c) const {
  return c * domain_size(feature) + value;
}

void FrequencyTable::apply(std::size_t c, std::span<const std::size_t> values, bool add) {
  const auto step = [add](std::uint64_t& n) { add ? ++n : --n; };
  step(class_totals_[c]);
  step(total_);
  for (std::size_t f = 0; f < features_.size(); ++f) {
    step(feature_counts_[f][slot(f, values[f], c)]);
  }
}

void FrequencyTable::observe(std::size_t class_value, std::span<const std::size_t> values) {
  check_class(class_value);
  if (values.size() != features_.size()) {
    throw IncompleteObservation("observation assigns " + std::to_string(values.size()) +
                                " of " + std::to_string(features_.size()) + " features");
  }
  for (std::size_t f = 0; f < features_.size(); ++f) check_value(f, values[f]);

  if (window_) {
    if (ring_.size() == *window_) {
      const auto& oldest = ring_.front();
      apply(oldest.front(), std::span(oldest).subspan(1), false);
      ring_.pop_front();
    }
    std::vector<std::size_t> entry;
    entry.reserve(values.size() + 1);
    entry.push_back(class_value);
    entry.insert(entry.end(), values.begin(), values.end());
    ring_.push_back(std::move(entry));
  }
  apply(class_value, values, true);
}

void FrequencyTable::observe(std::string_view class_value, const Evidence& evidence) {
  check_evidence(evidence);
  std::vector<std::optional<std::size_t>> slots(features_.size());
  for (const auto& [f, v] : evidence.assignments) slots[f] = v;
  std::vector<std::size_t> values;
  values.reserve(features_.size());
  for (std::size_t f = 0; f < features_.size(); ++f) {
    if (!slots[f]) throw IncompleteObservation("feature " + features_[f].name + " not assigned");
    values.push_back(*slots[f]);
  }
  observe(class_index(class_value), values);
}

std::uint64_t FrequencyTable::count(std::size_t c) const {
  check_class(c);
  return class_totals_[c];
}

std::uint64_t FrequencyTable::count(std::size_t c, std::size_t feature, std::size_t value) const {
  check_class(c);
  check_value(feature, value);
  return feature_counts_[feature][slot(feature, value, c)];
}

double FrequencyTable::prior(std::size_t c) const {
  check_class(c);
  const auto k = static_cast<double>(class_values_.size());
  const double denom = static_cast<double>(total_) + alpha_ * k;
  if (denom == 0.0) return 1.0 / k;
  return (static_cast<double>(class_totals_[c]) + alpha_) / denom;
}

double FrequencyTable::conditional(std::size_t feature, std::size_t value, std::size_t c) const {
  check_class(c);
  check_value(feature, value);
  const auto v = static_cast<double>(domain_size(feature));
  const double denom = static_cast<double>(class_totals_[c]) + alpha_ * v;
  if (denom == 0.0) return 1.0 / v;
  return (static_cast<double>(feature_counts_[feature][slot(feature, value, c)]) + alpha_) / denom;
}

double FrequencyTable::marginal(std::size_t feature, std::size_t value) const {
  double sum = 0.0;
  for (std::size_t c = 0; c < class_values_.size(); ++c) {
    sum += conditional(feature, value, c) * prior(c);
  }
  return sum;
}

double FrequencyTable::score(std::size_t c, const Evidence& evidence) const {
  double s = prior(c);
  for (const auto& [f, v] : evidence.assignments) s *= conditional(f, v, c);
  return s;
}

double FrequencyTable::posterior(std::size_t c, const Evidence& evidence) const {
  check_class(c);
  check_evidence(evidence);
  double sum = 0.0;
  double target = 0.0;
  for (std::size_t k = 0; k < class_values_.size(); ++k) {
    const double s = score(k, evidence);
    sum += s;
    if (k == c) target = s;
  }
  if (!(sum > 0.0)) throw IndeterminatePosterior("all class scores are zero for this evidence");
  return target / sum;
}

std::vector<double> FrequencyTable::posteriors(const Evidence& evidence) const {
  check_evidence(evidence);
  std::vector<double> out(class_values_.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = score(k, evidence);
    sum += out[k];
  }
  if (!(sum > 0.0)) throw IndeterminatePosterior("all class scores are zero for this evidence");
  for (auto& p : out) p /= sum;
  return out;
}

double FrequencyTable::posterior_literal(std::size_t c, const Evidence& evidence) const {
  check_class(c);
  check_evidence(evidence);
  double numerator = prior(c);
  double denominator = 1.0;
  for (const auto& [f, v] : evidence.assignments) {
    numerator *= conditional(f, v, c);
    denominator *= marginal(f, v);
  }
  if (!(denominator > 0.0)) throw IndeterminatePosterior("zero marginal in literal posterior");
  return std::clamp(numerator / denominator, 0.0, 1.0);
}

void FrequencyTable::serialize(std::ostream& out) const {
  char alpha[32];
  std::snprintf(alpha, sizeof alpha, "%.17g", alpha_);
  out << "table\t" << alpha << '\t' << (window_ ? std::to_string(*window_) : "unlimited") << '\n';
  for (const auto& c : class_values_) out << "class\t" << c << '\n';
  for (const auto& f : features_) {
    out << "feature\t" << f.name << '\t' << f.absent_label;
    for (const auto& v : f.values) out << '\t' << v;
    out << '\n';
  }
  for (std::size_t c = 0; c < class_values_.size(); ++c) {
    out << "count\t" << class_values_[c] << "\t*\t*\t" << class_totals_[c] << '\n';
    for (std::size_t f = 0; f < features_.size(); ++f) {
      for (std::size_t v = 0; v < domain_size(f); ++v) {
        const auto n = feature_counts_[f][slot(f, v, c)];
        if (n == 0) continue;
        out << "count\t" << class_values_[c] << '\t' << features_[f].name << '\t'
            << value_label(f, v) << '\t' << n << '\n';
      }
    }
  }
  for (const auto& entry : ring_) {
    out << "obs\t" << class_values_[entry.front()];
    for (std::size_t f = 0; f < features_.size(); ++f) out << '\t' << value_label(f, entry[f + 1]);
    out << '\n';
  }
  out << "end\n";
}

std::string FrequencyTable::serialize() const {
  std::ostringstream out;
  serialize(out);
  return out.str();
}

FrequencyTable FrequencyTable::deserialize(std::string_view text) {
  std::istringstream in{std::string(text)};
  return deserialize(in);
}

FrequencyTable FrequencyTable::deserialize(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DomainError("table text is empty");
  auto head = split_tabs(line);
  if (head.size() != 3 || head[0] != "table") throw DomainError("expected table header, got '" + line + "'");
  const double alpha = std::stod(std::string(head[1]));
  std::optional<std::size_t> window;
  if (head[2] != "unlimited") window = parse_count(head[2]);

  std::vector<std::string> classes;
  std::vector<FeatureSpec> features;
  struct CountLine {
    std::string cls, feature, value;
    std::uint64_t n;
  };
  std::vector<CountLine> counts;
  std::vector<std::vector<std::string>> observations;
  bool closed = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto parts = split_tabs(line);
    if (parts[0] == "end") {
      closed = true;
      break;
    }
    if (parts[0] == "class" && parts.size() == 2) {
      classes.emplace_back(parts[1]);
    } else if (parts[0] == "feature" && parts.size() >= 3) {
      FeatureSpec spec{std::string(parts[1]), {}, std::string(parts[2])};
      for (std::size_t i = 3; i < parts.size(); ++i) spec.values.emplace_back(parts[i]);
      features.push_back(std::move(spec));
    } else if (parts[0] == "count" && parts.size() == 5) {
      counts.push_back({std::string(parts[1]), std::string(parts[2]), std::string(parts[3]),
                        parse_count(parts[4])});
    } else if (parts[0] == "obs" && parts.size() >= 2) {
      observations.emplace_back(parts.begin() + 1, parts.end());
    } else {
      throw DomainError("unrecognized table line '" + line + "'");
    }
  }
  if (!closed) throw DomainError("table text is missing its end line");

  FrequencyTable table(std::move(classes), std::move(features), alpha, window);
  if (window) {
    for (const auto& obs : observations) {
      if (obs.size() != table.feature_count() + 1) throw DomainError("malformed obs line");
      std::vector<std::size_t> values;
      for (std::size_t f = 0; f < table.feature_count(); ++f) {
        values.push_back(table.value_index(f, obs[f + 1]));
      }
      table.observe(table.class_index(obs[0]), values);
    }
    // The replayed ring must reproduce the stored counts.
    for (const auto& c : counts) {
      const auto ci = table.class_index(c.cls);
      const std::uint64_t have =
          c.feature == "*" ? table.count(ci)
                           : table.count(ci, table.feature_index(c.feature),
                                         table.value_index(table.feature_index(c.feature), c.value));
      if (have != c.n) throw DomainError("windowed table counts disagree with its observations");
    }
    return table;
  }
  if (!observations.empty()) throw DomainError("obs lines are only valid for windowed tables");

  for (const auto& c : counts) {
    const auto ci = table.class_index(c.cls);
    if (c.feature == "*") {
      table.class_totals_[ci] = c.n;
      table.total_ += c.n;
    } else {
      const auto f = table.feature_index(c.feature);
      table.feature_counts_[f][table.slot(f, table.value_index(f, c.value), ci)] = c.n;
    }
  }
  for (std::size_t ci = 0; ci < table.class_count(); ++ci) {
    for (std::size_t f = 0; f < table.feature_count(); ++f) {
      std::uint64_t sum = 0;
      for (std::size_t v = 0; v < table.domain_size(f); ++v) sum += table.count(ci, f, v);
      if (sum != table.class_totals_[ci]) {
        throw DomainError("feature " + table.feature_name(f) + " counts do not sum to the class total");
      }
    }
  }
  return table;
}

}  // namespace bmaniac
