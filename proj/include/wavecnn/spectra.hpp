// SPDX-License-Identifier: Apache-2.0
//
// Magnitude spectra of first-layer kernels, sorted by peak frequency, with
// CSV and PGM writers.

#pragma once

#include <cstddef>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "wavecnn/model_zoo.hpp"

namespace wavecnn {

struct SpectrumMatrix {
  std::size_t rf = 0;
  std::size_t rows = 0;  // kernels
  std::size_t cols = 0;  // rf / 2 + 1 bins
  std::vector<double> values;  // row-major, each row scaled to a maximum of 1
  std::vector<std::size_t> kernel;  // original filter index of each row
  std::vector<std::size_t> peak_bin;  // argmax bin of each row

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// Centre frequency of DFT bin k for a length-rf kernel at 8 kHz.
double bin_frequency_hz(std::size_t k, std::size_t rf);

/// Kernel tensor [rf, 1, n]. Rows are sorted by peak bin, then kernel index.
/// An all-zero kernel keeps an all-zero row.
SpectrumMatrix kernel_spectra(const TensorD& kernel);
SpectrumMatrix kernel_spectra(const TensorF& kernel);
SpectrumMatrix kernel_spectra(const ModelGraph& model);
SpectrumMatrix kernel_spectra(const std::filesystem::path& checkpoint_path);

/// Header row of bin frequencies, then one row per kernel.
void write_spectrum_csv(const SpectrumMatrix& m, std::ostream& out);
/// Binary P5, one pixel per cell, value round(255 * magnitude).
void write_spectrum_pgm(const SpectrumMatrix& m, std::ostream& out);

void write_spectrum_csv(const SpectrumMatrix& m, const std::filesystem::path& path);
void write_spectrum_pgm(const SpectrumMatrix& m, const std::filesystem::path& path);

}  // namespace wavecnn
