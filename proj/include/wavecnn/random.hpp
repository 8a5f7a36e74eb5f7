// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace wavecnn {

/// Seeded pseudorandom source with a platform-independent value stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Distributions are implemented here rather than taken from
/// <random>, since the standard leaves those implementation-defined:
///   uniform()   53 high bits of one draw scaled into [0, 1)
///   normal()    Box-Muller on two uniforms, second variate cached
///   index(n)    rejection sampling on the raw 64-bit draw
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed = 0) : engine_(seed), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n);

  /// Serialized engine state (decimal words, space separated).
  std::string state() const;
  void set_state(const std::string& state);

  /// Independent stream derived from (seed, stream) via splitmix64 mixing.
  static RandomSource derive(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace wavecnn
