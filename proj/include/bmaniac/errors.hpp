#pragma once

#include <stdexcept>
#include <string>

namespace bmaniac {

// A class, feature, value, node or grid level outside its declared domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// observe() was handed evidence that leaves at least one feature unassigned.
class IncompleteObservation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Every class score is zero (only reachable with alpha == 0).
class IndeterminatePosterior : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace bmaniac
