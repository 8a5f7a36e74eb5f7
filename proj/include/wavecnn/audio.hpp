// SPDX-License-Identifier: Apache-2.0
//
// WAV decoding and the waveform preprocessing chain:
// decode -> mono -> 8 kHz -> standardize -> fix_length.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "wavecnn/error.hpp"

namespace wavecnn {

inline constexpr std::uint32_t kTargetRate = 8000;

/// Base for WAV parse failures; `offset()` is the byte position where the
/// problem was detected.
class WavError : public Error {
 public:
  WavError(const std::string& what, std::size_t offset)
      : Error(what + " (byte offset " + std::to_string(offset) + ")"), detail_(what), offset_(offset) {}
  std::size_t offset() const { return offset_; }
  /// The message without the offset suffix.
  const std::string& detail() const { return detail_; }

 private:
  std::string detail_;
  std::size_t offset_;
};

class WavHeaderError : public WavError {
 public:
  using WavError::WavError;
};
class WavCodecError : public WavError {
 public:
  using WavError::WavError;
};
class WavTruncatedError : public WavError {
 public:
  using WavError::WavError;
};

struct DecodedAudio {
  std::uint32_t sample_rate = 0;
  std::vector<std::vector<double>> channels;  // one vector per channel, all the same length

  std::size_t channel_count() const { return channels.size(); }
  std::size_t frames() const { return channels.empty() ? 0 : channels.front().size(); }
};

/// RIFF/WAVE with PCM 8/16/24/32-bit integer or 32-bit float samples,
/// including WAVE_FORMAT_EXTENSIBLE. Integer PCM is divided by 2^(bits-1)
/// (8-bit is unsigned, centered at 128).
DecodedAudio decode_wav(std::span<const std::byte> bytes);
DecodedAudio read_wav_file(const std::filesystem::path& path);

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);

/// Averages channels, then resamples to 8 kHz with a Kaiser-windowed sinc
/// low-pass at 4 kHz. Throws ConfigError below 8 kHz.
std::vector<double> to_mono_8k(const std::vector<std::vector<double>>& channels, std::uint32_t rate);

/// Rational-ratio polyphase resampler. Downsampling only.
class Resampler {
 public:
  Resampler(std::uint32_t in_rate, std::uint32_t out_rate, std::size_t zero_crossings = 128, double beta = 6.0);

  /// ceil(n * out / in) samples.
  std::vector<double> process(std::span<const double> input) const;
  std::size_t output_length(std::size_t input_length) const;

  std::size_t up() const { return up_; }
  std::size_t down() const { return down_; }
  std::size_t taps_per_phase() const { return 2 * half_ + 1; }

 private:
  void phase_taps(std::size_t phase, std::span<double> out) const;

  std::size_t up_ = 1, down_ = 1;
  std::size_t half_ = 0;  // taps on each side of the centre
  double ratio_ = 1.0;
  double beta_ = 6.0;
  double half_width_ = 0.0;  // window half-length in input samples
  std::vector<double> table_;  // up_ * taps_per_phase(); empty when computed on the fly
};

/// (x - mean) / max(std, 1e-8), population statistics.
void standardize(std::span<double> samples);
std::vector<double> standardized(std::vector<double> samples);

/// Truncates to the head or zero-pads at the end.
std::vector<double> fix_length(std::vector<double> samples, std::size_t target = 32000);

/// Decode, mono downmix and resampling to 8 kHz; at least one sample.
std::vector<double> resample_wav(std::span<const std::byte> bytes);

/// The full chain for one file's bytes, returning `target` float samples.
std::vector<float> preprocess_wav(std::span<const std::byte> bytes, std::size_t target = 32000);

}  // namespace wavecnn
