// Copyright (c) 2026 The flashsep Authors
// SPDX-License-Identifier: Apache-2.0

// Seeded randomness. Every consumer draws from a named stream derived from
// the run seed, so adding a consumer never perturbs the others. Variates are
// produced from raw 64-bit words with explicit formulas so results do not
// depend on the standard library's distribution implementations.

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace flashsep {

std::uint64_t splitmix64(std::uint64_t x);

/// Seed of the sub-stream `name` of `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Uniform double in [0, 1) from 64 random bits.
inline double bits_to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Counter-based standard normal: a pure function of (key, counter).
double counter_normal(std::uint64_t key, std::uint64_t counter);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::string_view stream) : engine_(derive_seed(seed, stream)) {}

  std::uint64_t bits() { return engine_(); }
  double uniform() { return bits_to_unit(engine_()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace flashsep
