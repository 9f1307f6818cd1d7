#pragma once

#include <cstdint>
#include <random>

namespace bmaniac {

// Seeded generator with hand-rolled mappings to uniform doubles and integers.
// The std:: distributions are implementation-defined, so traces would differ
// between standard libraries; these mappings only depend on mt19937_64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01();

  // Uniform on [0, n); n must be positive.
  std::uint64_t uniform_below(std::uint64_t n);

  // Uniform on [lo, hi], inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  bool bernoulli(double p) { return uniform01() < p; }

  bool operator==(const Rng&) const = default;

 private:
  std::mt19937_64 engine_;
};

// splitmix64 finalizer; derives independent stream seeds from one run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace bmaniac
