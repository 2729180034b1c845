#pragma once

#include <cstdint>
#include <random>

#include "koopctl/box.h"

namespace koopctl {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for stream (a, b) under a base seed:
/// splitmix64(splitmix64(base ^ splitmix64(a)) + b).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

/// mt19937_64 with a portable double conversion (top 53 bits), so sample
/// bytes do not depend on the standard library's distribution classes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  Vector uniform_in(const Box& box);
  /// Standard normal via Box-Muller.
  double normal();
  /// Uniform on the unit sphere in R^n.
  Vector unit_vector(int n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace koopctl
