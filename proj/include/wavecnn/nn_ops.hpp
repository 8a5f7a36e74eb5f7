// SPDX-License-Identifier: Apache-2.0
//
// Forward and backward rules for every layer type used by the waveform
// networks. Activations are [batch, time, channels]; kernels are
// [receptive_field, in_channels, out_channels].

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

#include "wavecnn/random.hpp"
#include "wavecnn/tensor.hpp"

namespace wavecnn {

enum class Mode { train, infer };

// ---------------------------------------------------------------------------
// Convolution

/// "Same" padding: output time is ceil(T / stride); the total pad is split as
/// evenly as possible with the odd element at the end.
struct ConvGeometry {
  std::size_t in_time = 0;
  std::size_t out_time = 0;
  std::size_t receptive_field = 0;
  std::size_t stride = 1;
  std::size_t pad_left = 0;
  std::size_t pad_right = 0;
};

ConvGeometry conv_geometry(std::size_t in_time, std::size_t receptive_field, std::size_t stride);

template <typename T>
struct ConvParams {
  Tensor<T> kernel;  // [rf, in, out]
  Tensor<T> bias;    // [out], empty when the conv feeds batch normalization
  std::size_t stride = 1;

  bool has_bias() const { return !bias.empty(); }
};

template <typename T>
struct ConvGrads {
  Tensor<T> grad_x;
  Tensor<T> grad_kernel;
  Tensor<T> grad_bias;  // empty when the forward had no bias
};

/// `bias` may be null.
template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& x, const Tensor<T>& kernel, const std::type_identity_t<Tensor<T>>* bias,
                         std::size_t stride);

template <typename T>
ConvGrads<T> conv1d_backward(const Tensor<T>& grad_out, const Tensor<T>& x, const Tensor<T>& kernel, bool with_bias,
                             std::size_t stride);

template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& x, const ConvParams<T>& p) {
  return conv1d_forward(x, p.kernel, p.has_bias() ? &p.bias : nullptr, p.stride);
}

template <typename T>
ConvGrads<T> conv1d_backward(const Tensor<T>& grad_out, const Tensor<T>& x, const ConvParams<T>& p) {
  return conv1d_backward(grad_out, x, p.kernel, p.has_bias(), p.stride);
}

// ---------------------------------------------------------------------------
// Max pooling (window == stride, ceil semantics on the trailing window)

inline constexpr std::size_t kPoolWindow = 4;

template <typename T>
struct MaxPoolResult {
  Tensor<T> out;
  std::vector<std::uint32_t> argmax;  // input time index per output element
};

template <typename T>
MaxPoolResult<T> maxpool1d_forward(const Tensor<T>& x, std::size_t window = kPoolWindow);

template <typename T>
Tensor<T> maxpool1d_backward(const Tensor<T>& grad_out, std::span<const std::uint32_t> argmax,
                             const Shape& input_shape);

// ---------------------------------------------------------------------------
// Batch normalization, statistics pooled over batch and time per channel

struct BatchNormConfig {
  double momentum = 0.1;
  double epsilon = 1e-5;
};

template <typename T>
struct BatchNormStats {
  Tensor<T> running_mean;
  Tensor<T> running_var;

  bool initialized() const { return !running_mean.empty(); }
  /// Mean 0, variance 1.
  static BatchNormStats identity(std::size_t channels);
};

template <typename T>
struct BatchNormState {
  Tensor<T> gamma;
  Tensor<T> beta;
  BatchNormStats<T> stats;
  BatchNormConfig config;

  /// gamma 1, beta 0, running statistics left uninitialized.
  static BatchNormState fresh(std::size_t channels);
};

template <typename T>
struct BatchNormCache {
  Mode mode = Mode::train;
  Tensor<T> x_hat;
  std::vector<T> inv_std;
};

template <typename T>
struct BatchNormForward {
  Tensor<T> y;
  BatchNormCache<T> cache;
};

template <typename T>
struct BatchNormGrads {
  Tensor<T> grad_x;
  Tensor<T> grad_gamma;
  Tensor<T> grad_beta;
};

/// Train mode normalizes with batch statistics and updates `stats` (which
/// are set to identity first if uninitialized). Infer mode requires
/// initialized statistics and never writes them.
template <typename T>
BatchNormForward<T> batchnorm_forward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                                      BatchNormStats<T>& stats, const BatchNormConfig& config, Mode mode);

template <typename T>
BatchNormForward<T> batchnorm_forward(const Tensor<T>& x, BatchNormState<T>& s, Mode mode) {
  return batchnorm_forward(x, s.gamma, s.beta, s.stats, s.config, mode);
}

template <typename T>
BatchNormGrads<T> batchnorm_backward(const Tensor<T>& grad_y, const BatchNormCache<T>& cache, const Tensor<T>& gamma);

// ---------------------------------------------------------------------------
// Pointwise and structural ops

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x);

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_y, const Tensor<T>& x);

/// [B, T, C] -> [B, 1, C]
template <typename T>
Tensor<T> global_avg_pool_forward(const Tensor<T>& x);

template <typename T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& grad_y, const Shape& input_shape);

/// Zero-extends the channel axis from C to `out_channels`.
template <typename T>
Tensor<T> pad_channels_forward(const Tensor<T>& x, std::size_t out_channels);

template <typename T>
Tensor<T> pad_channels_backward(const Tensor<T>& grad_y, std::size_t in_channels);

template <typename T>
struct DropoutForward {
  Tensor<T> y;
  Tensor<T> mask;  // 0 or 1/(1-rate) per element; empty for identity
};

/// Inverted dropout. Identity in infer mode or when rate is 0.
template <typename T>
DropoutForward<T> dropout_forward(const Tensor<T>& x, double rate, Mode mode, RandomSource& rng);

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& grad_y, const Tensor<T>& mask);

// ---------------------------------------------------------------------------
// Fully connected and the softmax classifier head

/// x [B, C], w [C, K], bias [K] or null -> [B, K]
template <typename T>
Tensor<T> linear_forward(const Tensor<T>& x, const Tensor<T>& w, const std::type_identity_t<Tensor<T>>* bias);

template <typename T>
struct LinearGrads {
  Tensor<T> grad_x;
  Tensor<T> grad_w;
  Tensor<T> grad_bias;
};

template <typename T>
LinearGrads<T> linear_backward(const Tensor<T>& grad_y, const Tensor<T>& x, const Tensor<T>& w, bool with_bias);

template <typename T>
struct SoftmaxXent {
  double loss = 0.0;     // mean over the batch of -log p[label]
  Tensor<T> probabilities;  // [B, K]
};

/// Row softmax with max subtraction and mean cross-entropy.
template <typename T>
SoftmaxXent<T> softmax_xent_forward(const Tensor<T>& logits, std::span<const int> labels);

/// Gradient of the mean loss with respect to the logits, scaled by grad_loss.
template <typename T>
Tensor<T> softmax_xent_backward(const Tensor<T>& probabilities, std::span<const int> labels, T grad_loss = T{1});

template <typename T>
SoftmaxXent<T> dense_softmax_xent(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                                  std::span<const int> labels);

template <typename T>
LinearGrads<T> dense_softmax_xent_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& probabilities,
                                           std::span<const int> labels);

}  // namespace wavecnn
