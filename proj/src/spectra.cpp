// SPDX-License-Identifier: Apache-2.0

#include "wavecnn/spectra.hpp"

#include <fftw3.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>

#include "wavecnn/audio.hpp"
#include "wavecnn/train.hpp"

namespace wavecnn {

namespace {

// FFTW planning is not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& write) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  write(out);
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

double bin_frequency_hz(std::size_t k, std::size_t rf) {
  if (rf == 0) throw ConfigError("receptive field must be >= 1");
  return static_cast<double>(k) * static_cast<double>(kTargetRate) / static_cast<double>(rf);
}

SpectrumMatrix kernel_spectra(const TensorD& kernel) {
  if (kernel.shape().rank() != 3) {
    throw ShapeError("first-layer kernel must be [rf, in, out], got " + kernel.shape().to_string());
  }
  if (kernel.dim(1) != 1) {
    throw ConfigError("kernel spectra need a single input channel, first layer has " + std::to_string(kernel.dim(1)));
  }
  const std::size_t rf = kernel.dim(0), n = kernel.dim(2);
  if (rf == 0 || n == 0) throw ShapeError("empty first-layer kernel " + kernel.shape().to_string());
  const std::size_t cols = rf / 2 + 1;

  double* in = fftw_alloc_real(rf);
  fftw_complex* out = fftw_alloc_complex(cols);
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(rf), in, out, FFTW_ESTIMATE);
  }

  std::vector<double> raw(n * cols);
  std::vector<std::size_t> peak(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t t = 0; t < rf; ++t) in[t] = kernel[t * n + j];
    fftw_execute(plan);
    double* row = raw.data() + j * cols;
    for (std::size_t k = 0; k < cols; ++k) row[k] = std::hypot(out[k][0], out[k][1]);
    const double top = *std::max_element(row, row + cols);
    peak[j] = static_cast<std::size_t>(std::max_element(row, row + cols) - row);
    if (top > 0.0) {
      for (std::size_t k = 0; k < cols; ++k) row[k] /= top;
    }
  }
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(out);
  fftw_free(in);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return peak[a] < peak[b]; });

  SpectrumMatrix m;
  m.rf = rf;
  m.rows = n;
  m.cols = cols;
  m.values.resize(n * cols);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t j = order[r];
    std::copy_n(raw.begin() + static_cast<std::ptrdiff_t>(j * cols), cols,
                m.values.begin() + static_cast<std::ptrdiff_t>(r * cols));
    m.kernel.push_back(j);
    m.peak_bin.push_back(peak[j]);
  }
  return m;
}

SpectrumMatrix kernel_spectra(const TensorF& kernel) { return kernel_spectra(kernel.cast<double>()); }

SpectrumMatrix kernel_spectra(const ModelGraph& model) { return kernel_spectra(model.first_conv_kernel().value); }

SpectrumMatrix kernel_spectra(const std::filesystem::path& checkpoint_path) {
  return kernel_spectra(model_from_checkpoint(load_checkpoint(checkpoint_path)));
}

void write_spectrum_csv(const SpectrumMatrix& m, std::ostream& out) {
  for (std::size_t k = 0; k < m.cols; ++k) out << (k ? "," : "") << shortest(bin_frequency_hz(k, m.rf));
  out << '\n';
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t k = 0; k < m.cols; ++k) out << (k ? "," : "") << shortest(m.at(r, k));
    out << '\n';
  }
}

void write_spectrum_pgm(const SpectrumMatrix& m, std::ostream& out) {
  out << "P5\n" << m.cols << ' ' << m.rows << "\n255\n";
  for (double v : m.values) {
    const long level = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
    out.put(static_cast<char>(static_cast<unsigned char>(level)));
  }
}

void write_spectrum_csv(const SpectrumMatrix& m, const std::filesystem::path& path) {
  write_file(path, [&](std::ostream& out) { write_spectrum_csv(m, out); });
}

void write_spectrum_pgm(const SpectrumMatrix& m, const std::filesystem::path& path) {
  write_file(path, [&](std::ostream& out) { write_spectrum_pgm(m, out); });
}

}  // namespace wavecnn
