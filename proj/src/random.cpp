// SPDX-License-Identifier: Apache-2.0

#include "wavecnn/random.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "wavecnn/error.hpp"

namespace wavecnn {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double RandomSource::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double RandomSource::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

std::uint64_t RandomSource::index(std::uint64_t n) {
  if (n == 0) throw ConfigError("RandomSource::index: n must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

std::string RandomSource::state() const {
  std::ostringstream os;
  os << engine_ << ' ' << seed_ << ' ' << (has_cached_normal_ ? 1 : 0) << ' ';
  os.precision(17);
  os << std::hexfloat << cached_normal_;
  return os.str();
}

void RandomSource::set_state(const std::string& state) {
  std::istringstream is(state);
  int cached = 0;
  std::string normal_text;
  is >> engine_ >> seed_ >> cached >> normal_text;
  if (!is && !is.eof()) throw ConfigError("malformed RandomSource state");
  has_cached_normal_ = cached != 0;
  cached_normal_ = std::strtod(normal_text.c_str(), nullptr);
}

RandomSource RandomSource::derive(std::uint64_t seed, std::uint64_t stream) {
  return RandomSource(splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

}  // namespace wavecnn
