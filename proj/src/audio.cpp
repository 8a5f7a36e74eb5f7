// SPDX-License-Identifier: Apache-2.0

#include "wavecnn/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <optional>

#include "wavecnn/parallel.hpp"

namespace wavecnn {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

class Reader {
 public:
  explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  std::size_t size() const { return bytes_.size(); }

  bool has(std::size_t offset, std::size_t n) const { return offset <= bytes_.size() && bytes_.size() - offset >= n; }

  std::string tag(std::size_t offset) const {
    std::string s(4, '\0');
    std::memcpy(s.data(), bytes_.data() + offset, 4);
    return s;
  }

  std::uint32_t u32(std::size_t offset) const {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | std::to_integer<std::uint32_t>(bytes_[offset + i]);
    return v;
  }

  std::uint16_t u16(std::size_t offset) const {
    return static_cast<std::uint16_t>(std::to_integer<std::uint16_t>(bytes_[offset]) |
                                      (std::to_integer<std::uint16_t>(bytes_[offset + 1]) << 8));
  }

  std::uint8_t u8(std::size_t offset) const { return std::to_integer<std::uint8_t>(bytes_[offset]); }

 private:
  std::span<const std::byte> bytes_;
};

struct Format {
  std::uint16_t tag = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

Format parse_fmt(const Reader& r, std::size_t body, std::uint32_t size) {
  if (size < 16) throw WavHeaderError("fmt chunk shorter than 16 bytes", body);
  if (!r.has(body, size)) throw WavTruncatedError("fmt chunk runs past end of file", r.size());
  Format f;
  f.tag = r.u16(body);
  f.channels = r.u16(body + 2);
  f.rate = r.u32(body + 4);
  f.block_align = r.u16(body + 12);
  f.bits = r.u16(body + 14);
  std::size_t tag_offset = body;
  if (f.tag == kFormatExtensible) {
    if (size < 40) throw WavHeaderError("extensible fmt chunk shorter than 40 bytes", body);
    tag_offset = body + 24;
    f.tag = r.u16(tag_offset);
  }
  if (f.channels == 0) throw WavHeaderError("zero channels", body + 2);
  if (f.rate == 0) throw WavHeaderError("zero sample rate", body + 4);

  const bool pcm_ok = f.tag == kFormatPcm && (f.bits == 8 || f.bits == 16 || f.bits == 24 || f.bits == 32);
  const bool float_ok = f.tag == kFormatFloat && f.bits == 32;
  if (!pcm_ok && !float_ok) {
    throw WavCodecError("unsupported codec: format tag " + std::to_string(f.tag) + " with " +
                            std::to_string(f.bits) + " bits per sample",
                        tag_offset);
  }
  if (f.block_align != f.channels * (f.bits / 8)) {
    throw WavHeaderError("block align " + std::to_string(f.block_align) + " does not match " +
                             std::to_string(f.channels) + " channels of " + std::to_string(f.bits) + " bits",
                         body + 12);
  }
  return f;
}

double decode_sample(const Reader& r, std::size_t offset, const Format& f) {
  if (f.tag == kFormatFloat) {
    const std::uint32_t bits = r.u32(offset);
    float v;
    std::memcpy(&v, &bits, sizeof v);
    return static_cast<double>(v);
  }
  switch (f.bits) {
    case 8:
      return (static_cast<double>(r.u8(offset)) - 128.0) / 128.0;
    case 16:
      return static_cast<double>(static_cast<std::int16_t>(r.u16(offset))) / 32768.0;
    case 24: {
      std::uint32_t v = r.u8(offset) | (r.u8(offset + 1) << 8) | (static_cast<std::uint32_t>(r.u8(offset + 2)) << 16);
      if (v & 0x800000u) v |= 0xFF000000u;
      return static_cast<double>(static_cast<std::int32_t>(v)) / 8388608.0;
    }
    default:
      return static_cast<double>(static_cast<std::int32_t>(r.u32(offset))) / 2147483648.0;
  }
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

DecodedAudio decode_wav(std::span<const std::byte> bytes) {
  const Reader r(bytes);
  if (!r.has(0, 12)) throw WavTruncatedError("file shorter than a RIFF header", r.size());
  if (r.tag(0) != "RIFF") throw WavHeaderError("missing RIFF tag", 0);
  if (r.tag(8) != "WAVE") throw WavHeaderError("missing WAVE tag", 8);

  std::optional<Format> fmt;
  std::size_t offset = 12;
  while (true) {
    if (!r.has(offset, 8)) {
      if (offset >= r.size()) throw WavHeaderError("no data chunk", offset);
      throw WavTruncatedError("incomplete chunk header", offset);
    }
    const std::string id = r.tag(offset);
    const std::uint32_t size = r.u32(offset + 4);
    const std::size_t body = offset + 8;
    if (id == "fmt ") {
      fmt = parse_fmt(r, body, size);
    } else if (id == "data") {
      if (!fmt) throw WavHeaderError("data chunk before fmt chunk", offset);
      if (!r.has(body, size)) throw WavTruncatedError("data chunk runs past end of file", r.size());
      if (size % fmt->block_align != 0) {
        throw WavTruncatedError("data chunk ends inside a sample frame", body + size - size % fmt->block_align);
      }
      const std::size_t frames = size / fmt->block_align;
      const std::size_t width = fmt->bits / 8;
      DecodedAudio out;
      out.sample_rate = fmt->rate;
      out.channels.assign(fmt->channels, std::vector<double>(frames));
      for (std::size_t i = 0; i < frames; ++i) {
        for (std::size_t c = 0; c < fmt->channels; ++c) {
          out.channels[c][i] = decode_sample(r, body + i * fmt->block_align + c * width, *fmt);
        }
      }
      return out;
    }
    offset = body + size + (size & 1u);
  }
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::byte> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw Error("failed reading " + path.string());
  return bytes;
}

DecodedAudio read_wav_file(const std::filesystem::path& path) {
  const std::vector<std::byte> bytes = read_file_bytes(path);
  try {
    return decode_wav(bytes);
  } catch (const WavHeaderError& e) {
    throw WavHeaderError(path.string() + ": " + e.detail(), e.offset());
  } catch (const WavCodecError& e) {
    throw WavCodecError(path.string() + ": " + e.detail(), e.offset());
  } catch (const WavTruncatedError& e) {
    throw WavTruncatedError(path.string() + ": " + e.detail(), e.offset());
  }
}

// ---------------------------------------------------------------------------

Resampler::Resampler(std::uint32_t in_rate, std::uint32_t out_rate, std::size_t zero_crossings, double beta)
    : beta_(beta) {
  if (in_rate == 0 || out_rate == 0) throw ConfigError("sample rates must be positive");
  if (in_rate < out_rate) {
    throw ConfigError("upsampling from " + std::to_string(in_rate) + " Hz to " + std::to_string(out_rate) +
                      " Hz is not supported");
  }
  const std::uint32_t g = std::gcd(in_rate, out_rate);
  up_ = out_rate / g;
  down_ = in_rate / g;
  ratio_ = static_cast<double>(out_rate) / static_cast<double>(in_rate);
  half_width_ = static_cast<double>(zero_crossings) / ratio_;
  half_ = static_cast<std::size_t>(std::ceil(half_width_));
  if (up_ <= 1024) {
    const std::size_t n = taps_per_phase();
    table_.resize(up_ * n);
    for (std::size_t p = 0; p < up_; ++p) phase_taps(p, std::span(table_).subspan(p * n, n));
  }
}

// Tap j (0-based) weights input sample q + j - half for an output whose
// position is q + phase/up input samples.
void Resampler::phase_taps(std::size_t phase, std::span<double> out) const {
  const double frac = static_cast<double>(phase) / static_cast<double>(up_);
  const double i0_beta = std::cyl_bessel_i(0.0, beta_);
  double sum = 0.0;
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double tau = frac - (static_cast<double>(j) - static_cast<double>(half_));
    const double u = tau / half_width_;
    double w = 0.0;
    if (std::abs(u) <= 1.0) w = std::cyl_bessel_i(0.0, beta_ * std::sqrt(1.0 - u * u)) / i0_beta;
    out[j] = ratio_ * sinc(ratio_ * tau) * w;
    sum += out[j];
  }
  for (double& v : out) v /= sum;
}

std::size_t Resampler::output_length(std::size_t input_length) const {
  return (input_length * up_ + down_ - 1) / down_;
}

std::vector<double> Resampler::process(std::span<const double> input) const {
  const std::size_t n_out = output_length(input.size());
  std::vector<double> out(n_out);
  if (up_ == 1 && down_ == 1) {
    std::copy(input.begin(), input.end(), out.begin());
    return out;
  }
  const std::size_t taps = taps_per_phase();
  const auto n_in = static_cast<long long>(input.size());
  parallel_for(n_out, [&](std::size_t begin, std::size_t end) {
    std::vector<double> scratch(table_.empty() ? taps : 0);
    for (std::size_t n = begin; n < end; ++n) {
      const std::size_t num = n * down_;
      const std::size_t q = num / up_;
      const std::size_t phase = num % up_;
      const double* h;
      if (table_.empty()) {
        phase_taps(phase, scratch);
        h = scratch.data();
      } else {
        h = table_.data() + phase * taps;
      }
      const long long first = static_cast<long long>(q) - static_cast<long long>(half_);
      const std::size_t j0 = first < 0 ? static_cast<std::size_t>(-first) : 0;
      const auto j1 = static_cast<std::size_t>(std::clamp<long long>(n_in - first, 0, static_cast<long long>(taps)));
      double acc = 0.0;
      for (std::size_t j = j0; j < j1; ++j) {
        acc += h[j] * input[static_cast<std::size_t>(first + static_cast<long long>(j))];
      }
      out[n] = acc;
    }
  });
  return out;
}

std::vector<double> to_mono_8k(const std::vector<std::vector<double>>& channels, std::uint32_t rate) {
  if (channels.empty()) throw ConfigError("audio has no channels");
  if (rate < kTargetRate) {
    throw ConfigError("sample rate " + std::to_string(rate) + " Hz is below 8000 Hz; upsampling is not supported");
  }
  const std::size_t frames = channels.front().size();
  std::vector<double> mono(frames, 0.0);
  for (const auto& ch : channels) {
    if (ch.size() != frames) throw ShapeError("channels have different lengths");
    for (std::size_t i = 0; i < frames; ++i) mono[i] += ch[i];
  }
  if (channels.size() > 1) {
    const double inv = 1.0 / static_cast<double>(channels.size());
    for (double& v : mono) v *= inv;
  }
  if (rate == kTargetRate) return mono;
  return Resampler(rate, kTargetRate).process(mono);
}

void standardize(std::span<double> samples) {
  if (samples.empty()) throw ShapeError("cannot standardize an empty clip");
  // Shifting by the first sample keeps constant clips exactly zero.
  const double shift = samples[0];
  double sum = 0.0;
  for (double v : samples) sum += v - shift;
  const double mean = shift + sum / static_cast<double>(samples.size());
  double sq = 0.0;
  for (double v : samples) sq += (v - mean) * (v - mean);
  const double sd = std::max(std::sqrt(sq / static_cast<double>(samples.size())), 1e-8);
  for (double& v : samples) v = (v - mean) / sd;
}

std::vector<double> standardized(std::vector<double> samples) {
  standardize(samples);
  return samples;
}

std::vector<double> fix_length(std::vector<double> samples, std::size_t target) {
  samples.resize(target, 0.0);
  return samples;
}

std::vector<double> resample_wav(std::span<const std::byte> bytes) {
  const DecodedAudio audio = decode_wav(bytes);
  std::vector<double> x = to_mono_8k(audio.channels, audio.sample_rate);
  if (x.empty()) throw ShapeError("audio has no samples");
  return x;
}

std::vector<float> preprocess_wav(std::span<const std::byte> bytes, std::size_t target) {
  std::vector<double> x = resample_wav(bytes);
  standardize(x);
  x = fix_length(std::move(x), target);
  return std::vector<float>(x.begin(), x.end());
}

}  // namespace wavecnn
