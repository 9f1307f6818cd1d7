#include "bmaniac/auction_model.hpp"

#include "bmaniac/errors.hpp"

namespace bmaniac {
namespace {

FrequencyTable make_table(std::size_t node_count, const LambdaGrid& grid, std::uint32_t bins,
                          double alpha, std::optional<std::size_t> window) {
  FeatureSpec timeout{"t_bin", {}};
  for (std::uint32_t b = 1; b <= bins; ++b) timeout.values.push_back(std::to_string(b));
  FeatureSpec lambda1{"lambda1", {}};
  for (std::size_t i = 0; i < grid.size(); ++i) lambda1.values.push_back(to_string(grid.at(i)));
  FeatureSpec lambda2 = lambda1;
  lambda2.name = "lambda2";
  FeatureSpec destination{"d", {}};
  for (std::size_t n = 0; n < node_count; ++n) destination.values.push_back(std::to_string(n));
  return FrequencyTable({"gain", "no-gain"}, {timeout, lambda1, lambda2, destination}, alpha, window);
}

}  // namespace

AuctionSuccessModel::AuctionSuccessModel(std::size_t node_count, LambdaGrid grid,
                                         std::uint32_t timeout_max, std::uint32_t timeout_bins,
                                         double alpha, std::optional<std::size_t> window)
    : node_count_(node_count),
      grid_(std::move(grid)),
      timeout_max_(timeout_max),
      timeout_bins_(timeout_bins),
      table_(make_table(node_count, grid_, timeout_bins, alpha, window)) {
  if (timeout_max_ < 1) throw DomainError("T_max must be >= 1");
  if (timeout_bins_ < 1) throw DomainError("timeout bin count must be >= 1");
}

std::size_t AuctionSuccessModel::timeout_bin(std::uint32_t timeout) const {
  if (timeout < 1 || timeout > timeout_max_) {
    throw DomainError("timeout " + std::to_string(timeout) + " outside [1, " +
                      std::to_string(timeout_max_) + "]");
  }
  return static_cast<std::size_t>(std::uint64_t{timeout - 1} * timeout_bins_ / timeout_max_);
}

std::size_t AuctionSuccessModel::lambda_value(Lambda lambda) const {
  const auto i = grid_.index_of(lambda);
  if (i == grid_.size()) throw DomainError("lambda " + to_string(lambda) + " is not on the grid");
  return i;
}

Evidence AuctionSuccessModel::evidence(std::uint32_t timeout, Lambda lambda1, Lambda lambda2,
                                       NodeId destination) const {
  if (to_index(destination) >= node_count_) throw DomainError("unknown destination " + to_string(destination));
  Evidence e;
  e.set(kTimeoutFeature, timeout_bin(timeout));
  e.set(kLambda1Feature, lambda_value(lambda1));
  e.set(kLambda2Feature, lambda_value(lambda2));
  e.set(kDestinationFeature, to_index(destination));
  return e;
}

void AuctionSuccessModel::record_outcome(const AuctionOutcomeRecord& record) {
  const auto e = evidence(record.timeout, record.lambda1, record.lambda2, record.destination);
  std::size_t values[4];
  for (const auto& [f, v] : e.assignments) values[f] = v;
  table_.observe(record.success ? kGain : kNoGain, values);
}

double AuctionSuccessModel::success_probability(std::uint32_t timeout, Lambda lambda1, Lambda lambda2,
                                                NodeId destination) const {
  return table_.posterior(kGain, evidence(timeout, lambda1, lambda2, destination));
}

}  // namespace bmaniac
