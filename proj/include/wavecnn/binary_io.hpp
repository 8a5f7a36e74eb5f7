// SPDX-License-Identifier: Apache-2.0
//
// Little-endian float32 packing, independent of host byte order.

#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

namespace wavecnn {

inline void append_f32_le(std::vector<std::byte>& out, std::span<const float> values) {
  const std::size_t base = out.size();
  out.resize(base + 4 * values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) out[base + 4 * i + b] = static_cast<std::byte>((bits >> (8 * b)) & 0xFFu);
  }
}

inline void read_f32_le(std::span<const std::byte> in, std::span<float> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 3; b >= 0; --b) bits = (bits << 8) | std::to_integer<std::uint32_t>(in[4 * i + b]);
    values[i] = std::bit_cast<float>(bits);
  }
}

inline void append_u64_le(std::vector<std::byte>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::byte>((v >> (8 * b)) & 0xFFu));
}

inline std::uint64_t read_u64_le(std::span<const std::byte> in) {
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | std::to_integer<std::uint64_t>(in[b]);
  return v;
}

}  // namespace wavecnn
