#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bmaniac {

/// A budget fraction num/den in [0, 1], kept exact so prices and margins can
/// be computed in integer arithmetic.
struct Lambda {
  std::uint32_t num = 0;
  std::uint32_t den = 1;

  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }

  friend bool operator==(Lambda a, Lambda b) noexcept {
    return std::uint64_t{a.num} * b.den == std::uint64_t{b.num} * a.den;
  }
  friend std::strong_ordering operator<=>(Lambda a, Lambda b) noexcept {
    return std::uint64_t{a.num} * b.den <=> std::uint64_t{b.num} * a.den;
  }
};

/// Sorted set of admissible fractions sharing one denominator.
class LambdaGrid {
 public:
  LambdaGrid() : LambdaGrid(from_step(0.05)) {}

  /// {0, step, 2 step, ..., 1}; 1/step must be a whole number.
  static LambdaGrid from_step(double step);
  /// Arbitrary values in [0, 1]; each must be k/den for some den <= 1000.
  static LambdaGrid from_values(std::span<const double> values);

  std::size_t size() const noexcept { return levels_.size(); }
  std::uint32_t denominator() const noexcept { return den_; }
  Lambda at(std::size_t i) const { return Lambda{levels_.at(i), den_}; }
  std::vector<double> values() const;

  /// Index of the grid level equal to `lambda`, or size() when absent.
  std::size_t index_of(Lambda lambda) const noexcept;
  bool contains(Lambda lambda) const noexcept { return index_of(lambda) != size(); }
  /// Nearest level; ties go to the smaller one.
  Lambda nearest(Lambda lambda) const;

  bool operator==(const LambdaGrid&) const = default;

 private:
  LambdaGrid(std::uint32_t den, std::vector<std::uint32_t> levels);

  std::uint32_t den_;
  std::vector<std::uint32_t> levels_;
};

std::string to_string(Lambda lambda);

}  // namespace bmaniac
