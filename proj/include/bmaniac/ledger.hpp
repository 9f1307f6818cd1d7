#pragma once

#include <cstddef>
#include <vector>

#include "bmaniac/strategy.hpp"
#include "bmaniac/topology.hpp"

namespace bmaniac {

/// Exact integer accounting. The backbone is outside the ledger: money it
/// pays in counts as injected, wired-delivery fees it takes back reduce the
/// net injection, fines leave the system.
///
/// Invariant: sum of balances == injected() - fines().
class Ledger {
 public:
  explicit Ledger(std::size_t node_count) : balances_(node_count, 0) {}

  Money balance(NodeId node) const { return balances_.at(to_index(node)); }
  Money sum_balances() const;
  /// Net backbone injection: gross payments minus fees collected back.
  Money injected() const noexcept { return gross_injected_ - backbone_fees_; }
  Money gross_injected() const noexcept { return gross_injected_; }
  Money backbone_fees() const noexcept { return backbone_fees_; }
  Money fines() const noexcept { return fines_; }
  bool balanced() const { return sum_balances() - injected() + fines() == 0; }

  void inject(NodeId to, Money amount);
  void transfer(NodeId from, NodeId to, Money amount);
  void charge_fine(NodeId from, Money amount);
  void charge_backbone_fee(NodeId from, Money amount);

 private:
  std::vector<Money> balances_;
  Money gross_injected_ = 0;
  Money backbone_fees_ = 0;
  Money fines_ = 0;
};

}  // namespace bmaniac
