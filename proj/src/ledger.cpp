#include "bmaniac/ledger.hpp"

#include <numeric>

#include "bmaniac/errors.hpp"

namespace bmaniac {
namespace {

void check_amount(Money amount) {
  if (amount < 0) throw StateError("negative ledger amount");
}

}  // namespace

Money Ledger::sum_balances() const {
  return std::accumulate(balances_.begin(), balances_.end(), Money{0});
}

void Ledger::inject(NodeId to, Money amount) {
  check_amount(amount);
  balances_.at(to_index(to)) += amount;
  gross_injected_ += amount;
}

void Ledger::transfer(NodeId from, NodeId to, Money amount) {
  check_amount(amount);
  balances_.at(to_index(from)) -= amount;
  balances_.at(to_index(to)) += amount;
}

void Ledger::charge_fine(NodeId from, Money amount) {
  check_amount(amount);
  balances_.at(to_index(from)) -= amount;
  fines_ += amount;
}

void Ledger::charge_backbone_fee(NodeId from, Money amount) {
  check_amount(amount);
  balances_.at(to_index(from)) -= amount;
  backbone_fees_ += amount;
}

}  // namespace bmaniac
