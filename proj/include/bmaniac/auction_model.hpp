#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "bmaniac/core_bayes.hpp"
#include "bmaniac/lambda_grid.hpp"
#include "bmaniac/topology.hpp"

namespace bmaniac {

/// One auction feedback sample.
struct AuctionOutcomeRecord {
  std::uint32_t timeout = 1;  // announced, in ticks
  Lambda lambda1;
  Lambda lambda2;
  NodeId destination{};
  bool success = false;  // gain vs no-gain
};

/// Gain/no-gain classifier over (timeout bin, lambda1, lambda2, destination).
class AuctionSuccessModel {
 public:
  static constexpr std::size_t kGain = 0;
  static constexpr std::size_t kNoGain = 1;
  static constexpr std::size_t kTimeoutFeature = 0;
  static constexpr std::size_t kLambda1Feature = 1;
  static constexpr std::size_t kLambda2Feature = 2;
  static constexpr std::size_t kDestinationFeature = 3;

  AuctionSuccessModel(std::size_t node_count, LambdaGrid grid, std::uint32_t timeout_max,
                      std::uint32_t timeout_bins = 8, double alpha = 1.0,
                      std::optional<std::size_t> window = std::nullopt);

  /// 0-based bin of t among `timeout_bins` equal-width bins over [1, T_max].
  std::size_t timeout_bin(std::uint32_t timeout) const;

  void record_outcome(const AuctionOutcomeRecord& record);

  /// Normalized P(s = gain | t, lambda1, lambda2, d).
  double success_probability(std::uint32_t timeout, Lambda lambda1, Lambda lambda2,
                             NodeId destination) const;

  const FrequencyTable& table() const noexcept { return table_; }
  const LambdaGrid& grid() const noexcept { return grid_; }
  std::uint32_t timeout_max() const noexcept { return timeout_max_; }
  std::uint32_t timeout_bins() const noexcept { return timeout_bins_; }

  std::string serialize() const { return table_.serialize(); }

 private:
  Evidence evidence(std::uint32_t timeout, Lambda lambda1, Lambda lambda2, NodeId destination) const;
  std::size_t lambda_value(Lambda lambda) const;

  std::size_t node_count_;
  LambdaGrid grid_;
  std::uint32_t timeout_max_;
  std::uint32_t timeout_bins_;
  FrequencyTable table_;
};

}  // namespace bmaniac
