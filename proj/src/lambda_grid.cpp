#include "bmaniac/lambda_grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "bmaniac/errors.hpp"

namespace bmaniac {
namespace {

constexpr std::uint32_t kMaxDenominator = 1000;
constexpr double kSnap = 1e-9;

}  // namespace

LambdaGrid::LambdaGrid(std::uint32_t den, std::vector<std::uint32_t> levels)
    : den_(den), levels_(std::move(levels)) {
  if (levels_.empty()) throw DomainError("lambda grid is empty");
}

LambdaGrid LambdaGrid::from_step(double step) {
  if (!(step > 0.0) || step > 1.0) throw DomainError("lambda step must lie in (0, 1]");
  const double inverse = 1.0 / step;
  const auto den = static_cast<std::uint32_t>(std::llround(inverse));
  if (den == 0 || den > kMaxDenominator || std::abs(inverse - den) > 1e-6 * inverse) {
    throw DomainError("1 / lambda step must be a whole number <= 1000");
  }
  std::vector<std::uint32_t> levels(den + 1);
  std::iota(levels.begin(), levels.end(), 0u);
  return LambdaGrid(den, std::move(levels));
}

LambdaGrid LambdaGrid::from_values(std::span<const double> values) {
  if (values.empty()) throw DomainError("lambda grid is empty");
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("lambda grid values must lie in [0, 1]");
  }
  for (std::uint32_t den = 1; den <= kMaxDenominator; ++den) {
    std::vector<std::uint32_t> levels;
    bool fits = true;
    for (double v : values) {
      const double scaled = v * den;
      const auto k = std::llround(scaled);
      if (std::abs(scaled - static_cast<double>(k)) > kSnap * den) {
        fits = false;
        break;
      }
      levels.push_back(static_cast<std::uint32_t>(k));
    }
    if (!fits) continue;
    std::sort(levels.begin(), levels.end());
    if (std::adjacent_find(levels.begin(), levels.end()) != levels.end()) {
      throw DomainError("lambda grid has duplicate values");
    }
    return LambdaGrid(den, std::move(levels));
  }
  throw DomainError("lambda grid values are not fractions with denominator <= 1000");
}

std::vector<double> LambdaGrid::values() const {
  std::vector<double> out;
  out.reserve(levels_.size());
  for (std::size_t i = 0; i < levels_.size(); ++i) out.push_back(at(i).value());
  return out;
}

std::size_t LambdaGrid::index_of(Lambda lambda) const noexcept {
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    if (at(i) == lambda) return i;
  }
  return levels_.size();
}

Lambda LambdaGrid::nearest(Lambda lambda) const {
  // Compare |level/den - num/lden| via cross-multiplication.
  const auto distance = [&](std::uint32_t level) {
    const auto a = std::int64_t{level} * lambda.den;
    const auto b = std::int64_t{lambda.num} * den_;
    return a > b ? a - b : b - a;
  };
  auto best = levels_.front();
  for (auto level : levels_) {
    if (distance(level) < distance(best)) best = level;
  }
  return Lambda{best, den_};
}

std::string to_string(Lambda lambda) {
  return std::to_string(lambda.num) + "/" + std::to_string(lambda.den);
}

}  // namespace bmaniac
