#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bmaniac {

/// A categorical feature. The table appends one extra value, the ABSENT
/// marker, after `values`; it stands for "feature undefined for this sample"
/// (e.g. no next hop when the destination is unreachable).
struct FeatureSpec {
  std::string name;
  std::vector<std::string> values;
  std::string absent_label = "ABSENT";

  bool operator==(const FeatureSpec&) const = default;
};

/// Partial assignment of feature values, by index. Features may be omitted.
struct Evidence {
  std::vector<std::pair<std::size_t, std::size_t>> assignments;  // (feature, value)

  Evidence& set(std::size_t feature, std::size_t value) {
    assignments.emplace_back(feature, value);
    return *this;
  }
  bool empty() const noexcept { return assignments.empty(); }
  std::size_t size() const noexcept { return assignments.size(); }
};

/// Incremental categorical Naive Bayes counts with additive smoothing.
///
/// Keeps one total per class value and one count per (class, feature, value).
/// With a window W only the W most recent observations are counted; older
/// ones are subtracted as new ones arrive.
///
///   prior(c)            = (n_c + a) / (N + a K)
///   conditional(f,v,c)  = (n_cfv + a) / (n_c + a V_f)
///   marginal(f,v)       = sum_c conditional(f,v,c) prior(c)
///   posterior(c|e)      = score(c) / sum_c' score(c'),
///                         score(c) = prior(c) prod_{(f,v) in e} conditional(f,v,c)
///
/// A zero denominator (a == 0 with no supporting counts) yields the uniform
/// value 1/K or 1/V_f.
class FrequencyTable {
 public:
  FrequencyTable(std::vector<std::string> class_values,
                 std::vector<FeatureSpec> features, double alpha = 1.0,
                 std::optional<std::size_t> window = std::nullopt);

  std::size_t class_count() const noexcept { return class_values_.size(); }
  std::size_t feature_count() const noexcept { return features_.size(); }
  /// Number of values of `feature`, ABSENT included.
  std::size_t domain_size(std::size_t feature) const;
  std::size_t absent_index(std::size_t feature) const;

  std::size_t class_index(std::string_view label) const;
  std::size_t feature_index(std::string_view name) const;
  std::size_t value_index(std::size_t feature, std::string_view label) const;
  const std::string& class_label(std::size_t c) const;
  const std::string& feature_name(std::size_t feature) const;
  const std::string& value_label(std::size_t feature, std::size_t value) const;
  const std::vector<FeatureSpec>& features() const noexcept { return features_; }
  const std::vector<std::string>& class_values() const noexcept { return class_values_; }

  /// Label-based evidence builder, mostly for tests and fixtures.
  Evidence evidence(
      std::initializer_list<std::pair<std::string_view, std::string_view>> items) const;

  /// `values` holds one value index per feature, in feature order.
  void observe(std::size_t class_value, std::span<const std::size_t> values);
  void observe(std::string_view class_value, const Evidence& evidence);

  std::uint64_t total() const noexcept { return total_; }
  std::uint64_t count(std::size_t c) const;
  std::uint64_t count(std::size_t c, std::size_t feature, std::size_t value) const;

  double prior(std::size_t c) const;
  double conditional(std::size_t feature, std::size_t value, std::size_t c) const;
  double marginal(std::size_t feature, std::size_t value) const;

  /// Normalized Naive Bayes posterior. Throws IndeterminatePosterior when
  /// every class score vanishes.
  double posterior(std::size_t c, const Evidence& evidence) const;
  std::vector<double> posteriors(const Evidence& evidence) const;

  /// prior * prod conditional / prod marginal, clamped to [0, 1]. Unlike
  /// posterior() the marginals are taken independently, so the raw ratio can
  /// exceed one. Kept for cross-checks against the normalized form.
  double posterior_literal(std::size_t c, const Evidence& evidence) const;

  double alpha() const noexcept { return alpha_; }
  std::optional<std::size_t> window() const noexcept { return window_; }

  /// Line-oriented text form: a header, then one tab-separated
  /// `count <class> <feature> <value> <n>` line per non-zero count.
  std::string serialize() const;
  void serialize(std::ostream& out) const;
  static FrequencyTable deserialize(std::string_view text);
  /// Reads one table, consuming lines up to and including its `end` line.
  static FrequencyTable deserialize(std::istream& in);

  bool operator==(const FrequencyTable&) const = default;

 private:
  void check_class(std::size_t c) const;
  void check_value(std::size_t feature, std::size_t value) const;
  void check_evidence(const Evidence& evidence) const;
  void apply(std::size_t c, std::span<const std::size_t> values, bool add);
  std::size_t slot(std::size_t feature, std::size_t value, std::size_t c) const;
  double score(std::size_t c, const Evidence& evidence) const;

  std::vector<std::string> class_values_;
  std::vector<FeatureSpec> features_;
  double alpha_;
  std::optional<std::size_t> window_;

  std::uint64_t total_ = 0;
  std::vector<std::uint64_t> class_totals_;
  // Per feature, a flat [class][value] block.
  std::vector<std::vector<std::uint64_t>> feature_counts_;
  // Retained observations, oldest first; only populated when windowed.
  std::deque<std::vector<std::size_t>> ring_;
};

}  // namespace bmaniac
