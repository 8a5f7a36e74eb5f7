// SPDX-License-Identifier: Apache-2.0

#include "wavecnn/nn_ops.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "wavecnn/parallel.hpp"

namespace wavecnn {

namespace {

void require_rank(const Shape& s, std::size_t rank, const char* what) {
  if (s.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " + s.to_string());
  }
}

}  // namespace

ConvGeometry conv_geometry(std::size_t in_time, std::size_t receptive_field, std::size_t stride) {
  if (in_time < 1) throw ShapeError("conv1d: input time must be >= 1");
  if (stride < 1 || receptive_field < 1) throw ShapeError("conv1d: stride and receptive field must be >= 1");
  ConvGeometry g;
  g.in_time = in_time;
  g.receptive_field = receptive_field;
  g.stride = stride;
  g.out_time = (in_time + stride - 1) / stride;
  const std::size_t needed = (g.out_time - 1) * stride + receptive_field;
  const std::size_t total_pad = needed > in_time ? needed - in_time : 0;
  g.pad_left = total_pad / 2;
  g.pad_right = total_pad - g.pad_left;
  return g;
}

template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& x, const Tensor<T>& kernel, const std::type_identity_t<Tensor<T>>* bias,
                         std::size_t stride) {
  require_rank(x.shape(), 3, "conv1d input");
  require_rank(kernel.shape(), 3, "conv1d kernel");
  const std::size_t batch = x.dim(0), in_ch = x.dim(2);
  const std::size_t rf = kernel.dim(0), out_ch = kernel.dim(2);
  if (kernel.dim(1) != in_ch) {
    throw ShapeError("conv1d: input has " + std::to_string(in_ch) + " channels but kernel " +
                     kernel.shape().to_string() + " expects " + std::to_string(kernel.dim(1)));
  }
  if (bias && bias->shape() != Shape{out_ch}) {
    throw ShapeError("conv1d: bias shape " + bias->shape().to_string() + " does not match " +
                     std::to_string(out_ch) + " filters");
  }
  const ConvGeometry g = conv_geometry(x.dim(1), rf, stride);
  Tensor<T> out(Shape{batch, g.out_time, out_ch});

  const T* xs = x.raw();
  const T* ks = kernel.raw();
  T* ys = out.raw();
  const auto in_time = static_cast<std::ptrdiff_t>(g.in_time);
  parallel_for(batch, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      for (std::size_t t = 0; t < g.out_time; ++t) {
        T* acc = ys + (b * g.out_time + t) * out_ch;
        const std::ptrdiff_t start =
            static_cast<std::ptrdiff_t>(t * stride) - static_cast<std::ptrdiff_t>(g.pad_left);
        for (std::size_t r = 0; r < rf; ++r) {
          const std::ptrdiff_t ti = start + static_cast<std::ptrdiff_t>(r);
          if (ti < 0 || ti >= in_time) continue;
          const T* xr = xs + (b * g.in_time + static_cast<std::size_t>(ti)) * in_ch;
          const T* kr = ks + r * in_ch * out_ch;
          for (std::size_t c = 0; c < in_ch; ++c) {
            const T xv = xr[c];
            const T* kc = kr + c * out_ch;
            for (std::size_t o = 0; o < out_ch; ++o) acc[o] += xv * kc[o];
          }
        }
        if (bias) {
          const T* bs = bias->raw();
          for (std::size_t o = 0; o < out_ch; ++o) acc[o] += bs[o];
        }
      }
    }
  });
  check_finite(out, "conv1d_forward");
  return out;
}

template <typename T>
ConvGrads<T> conv1d_backward(const Tensor<T>& grad_out, const Tensor<T>& x, const Tensor<T>& kernel, bool with_bias,
                             std::size_t stride) {
  require_rank(x.shape(), 3, "conv1d_backward input");
  const std::size_t batch = x.dim(0), in_ch = x.dim(2);
  const std::size_t rf = kernel.dim(0), out_ch = kernel.dim(2);
  const ConvGeometry g = conv_geometry(x.dim(1), rf, stride);
  require_same_shape(grad_out.shape(), Shape{batch, g.out_time, out_ch}, "conv1d_backward grad_out");

  ConvGrads<T> r{Tensor<T>(x.shape()), Tensor<T>(kernel.shape()), Tensor<T>()};
  const T* xs = x.raw();
  const T* ks = kernel.raw();
  const T* gs = grad_out.raw();
  const auto in_time = static_cast<std::ptrdiff_t>(g.in_time);
  auto input_index = [&](std::size_t t, std::size_t k) -> std::ptrdiff_t {
    return static_cast<std::ptrdiff_t>(t * stride + k) - static_cast<std::ptrdiff_t>(g.pad_left);
  };

  // grad_x: each batch row is independent.
  T* gx = r.grad_x.raw();
  parallel_for(batch, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      for (std::size_t t = 0; t < g.out_time; ++t) {
        const T* grow = gs + (b * g.out_time + t) * out_ch;
        for (std::size_t k = 0; k < rf; ++k) {
          const std::ptrdiff_t ti = input_index(t, k);
          if (ti < 0 || ti >= in_time) continue;
          T* gxr = gx + (b * g.in_time + static_cast<std::size_t>(ti)) * in_ch;
          const T* kr = ks + k * in_ch * out_ch;
          for (std::size_t c = 0; c < in_ch; ++c) {
            const T* kc = kr + c * out_ch;
            T s = 0;
            for (std::size_t o = 0; o < out_ch; ++o) s += grow[o] * kc[o];
            gxr[c] += s;
          }
        }
      }
    }
  });

  // grad_kernel: partition over (k, c) rows; each row sums over (b, t) in a
  // fixed order whatever the partition.
  T* gk = r.grad_kernel.raw();
  parallel_for(rf * in_ch, [&](std::size_t u0, std::size_t u1) {
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t t = 0; t < g.out_time; ++t) {
        const T* grow = gs + (b * g.out_time + t) * out_ch;
        for (std::size_t u = u0; u < u1; ++u) {
          const std::size_t k = u / in_ch, c = u % in_ch;
          const std::ptrdiff_t ti = input_index(t, k);
          if (ti < 0 || ti >= in_time) continue;
          const T xv = xs[(b * g.in_time + static_cast<std::size_t>(ti)) * in_ch + c];
          T* gkr = gk + u * out_ch;
          for (std::size_t o = 0; o < out_ch; ++o) gkr[o] += xv * grow[o];
        }
      }
    }
  });

  if (with_bias) {
    r.grad_bias = Tensor<T>(Shape{out_ch});
    T* gb = r.grad_bias.raw();
    for (std::size_t row = 0; row < batch * g.out_time; ++row) {
      const T* grow = gs + row * out_ch;
      for (std::size_t o = 0; o < out_ch; ++o) gb[o] += grow[o];
    }
  }
  check_finite(r.grad_x, "conv1d_backward grad_x");
  check_finite(r.grad_kernel, "conv1d_backward grad_kernel");
  return r;
}

template <typename T>
MaxPoolResult<T> maxpool1d_forward(const Tensor<T>& x, std::size_t window) {
  require_rank(x.shape(), 3, "maxpool1d input");
  if (window < 1) throw ShapeError("maxpool1d: window must be >= 1");
  const std::size_t batch = x.dim(0), time = x.dim(1), ch = x.dim(2);
  const std::size_t out_time = (time + window - 1) / window;
  MaxPoolResult<T> r{Tensor<T>(Shape{batch, out_time, ch}), std::vector<std::uint32_t>(batch * out_time * ch)};
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < out_time; ++t) {
      const std::size_t t0 = t * window;
      const std::size_t t1 = std::min(time, t0 + window);
      for (std::size_t c = 0; c < ch; ++c) {
        T best = x.at(b, t0, c);
        std::size_t best_t = t0;
        for (std::size_t ti = t0 + 1; ti < t1; ++ti) {
          if (x.at(b, ti, c) > best) {
            best = x.at(b, ti, c);
            best_t = ti;
          }
        }
        const std::size_t o = (b * out_time + t) * ch + c;
        r.out[o] = best;
        r.argmax[o] = static_cast<std::uint32_t>(best_t);
      }
    }
  }
  return r;
}

template <typename T>
Tensor<T> maxpool1d_backward(const Tensor<T>& grad_out, std::span<const std::uint32_t> argmax,
                             const Shape& input_shape) {
  if (grad_out.size() != argmax.size()) throw ShapeError("maxpool1d_backward: argmax size mismatch");
  Tensor<T> gx(input_shape);
  const std::size_t out_time = grad_out.dim(1), ch = grad_out.dim(2);
  for (std::size_t b = 0; b < grad_out.dim(0); ++b) {
    for (std::size_t t = 0; t < out_time; ++t) {
      for (std::size_t c = 0; c < ch; ++c) {
        const std::size_t o = (b * out_time + t) * ch + c;
        gx.at(b, argmax[o], c) += grad_out[o];
      }
    }
  }
  return gx;
}

template <typename T>
BatchNormStats<T> BatchNormStats<T>::identity(std::size_t channels) {
  return BatchNormStats{Tensor<T>(Shape{channels}, T{0}), Tensor<T>(Shape{channels}, T{1})};
}

template <typename T>
BatchNormState<T> BatchNormState<T>::fresh(std::size_t channels) {
  BatchNormState s;
  s.gamma = Tensor<T>(Shape{channels}, T{1});
  s.beta = Tensor<T>(Shape{channels}, T{0});
  return s;
}

template <typename T>
BatchNormForward<T> batchnorm_forward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                                      BatchNormStats<T>& stats, const BatchNormConfig& config, Mode mode) {
  require_rank(x.shape(), 3, "batchnorm input");
  const std::size_t ch = x.dim(2);
  const std::size_t rows = x.dim(0) * x.dim(1);
  if (gamma.shape() != Shape{ch} || beta.shape() != Shape{ch}) {
    throw ShapeError("batchnorm: " + std::to_string(ch) + " input channels but gamma " + gamma.shape().to_string() +
                     " and beta " + beta.shape().to_string());
  }
  BatchNormForward<T> r;
  r.cache.mode = mode;
  r.cache.inv_std.resize(ch);
  std::vector<double> mean(ch, 0.0), var(ch, 0.0);

  if (mode == Mode::train) {
    if (!stats.initialized()) stats = BatchNormStats<T>::identity(ch);
    for (std::size_t i = 0; i < rows; ++i) {
      const T* row = x.raw() + i * ch;
      for (std::size_t c = 0; c < ch; ++c) mean[c] += row[c];
    }
    for (std::size_t c = 0; c < ch; ++c) mean[c] /= static_cast<double>(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      const T* row = x.raw() + i * ch;
      for (std::size_t c = 0; c < ch; ++c) {
        const double d = row[c] - mean[c];
        var[c] += d * d;
      }
    }
    for (std::size_t c = 0; c < ch; ++c) var[c] /= static_cast<double>(rows);
    for (std::size_t c = 0; c < ch; ++c) {
      stats.running_mean[c] =
          static_cast<T>((1.0 - config.momentum) * stats.running_mean[c] + config.momentum * mean[c]);
      stats.running_var[c] = static_cast<T>((1.0 - config.momentum) * stats.running_var[c] + config.momentum * var[c]);
    }
  } else {
    if (!stats.initialized()) {
      throw Error("batchnorm: inference requested before running statistics were initialized");
    }
    if (stats.running_mean.shape() != Shape{ch}) throw ShapeError("batchnorm: running statistics channel mismatch");
    for (std::size_t c = 0; c < ch; ++c) {
      mean[c] = stats.running_mean[c];
      var[c] = stats.running_var[c];
    }
  }

  for (std::size_t c = 0; c < ch; ++c) r.cache.inv_std[c] = static_cast<T>(1.0 / std::sqrt(var[c] + config.epsilon));
  r.cache.x_hat = Tensor<T>(x.shape());
  r.y = Tensor<T>(x.shape());
  for (std::size_t i = 0; i < rows; ++i) {
    const T* row = x.raw() + i * ch;
    T* xh = r.cache.x_hat.raw() + i * ch;
    T* yr = r.y.raw() + i * ch;
    for (std::size_t c = 0; c < ch; ++c) {
      xh[c] = static_cast<T>((row[c] - mean[c]) * r.cache.inv_std[c]);
      yr[c] = gamma[c] * xh[c] + beta[c];
    }
  }
  check_finite(r.y, "batchnorm_forward");
  return r;
}

template <typename T>
BatchNormGrads<T> batchnorm_backward(const Tensor<T>& grad_y, const BatchNormCache<T>& cache, const Tensor<T>& gamma) {
  require_same_shape(grad_y.shape(), cache.x_hat.shape(), "batchnorm_backward");
  const std::size_t ch = grad_y.dim(2);
  const std::size_t rows = grad_y.dim(0) * grad_y.dim(1);
  std::vector<double> sum_g(ch, 0.0), sum_gx(ch, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const T* g = grad_y.raw() + i * ch;
    const T* xh = cache.x_hat.raw() + i * ch;
    for (std::size_t c = 0; c < ch; ++c) {
      sum_g[c] += g[c];
      sum_gx[c] += static_cast<double>(g[c]) * xh[c];
    }
  }
  BatchNormGrads<T> r{Tensor<T>(grad_y.shape()), Tensor<T>(Shape{ch}), Tensor<T>(Shape{ch})};
  for (std::size_t c = 0; c < ch; ++c) {
    r.grad_beta[c] = static_cast<T>(sum_g[c]);
    r.grad_gamma[c] = static_cast<T>(sum_gx[c]);
  }
  const double n = static_cast<double>(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const T* g = grad_y.raw() + i * ch;
    const T* xh = cache.x_hat.raw() + i * ch;
    T* gx = r.grad_x.raw() + i * ch;
    for (std::size_t c = 0; c < ch; ++c) {
      const double scale = static_cast<double>(gamma[c]) * cache.inv_std[c];
      if (cache.mode == Mode::train) {
        gx[c] = static_cast<T>(scale * (g[c] - sum_g[c] / n - xh[c] * sum_gx[c] / n));
      } else {
        gx[c] = static_cast<T>(scale * g[c]);
      }
    }
  }
  check_finite(r.grad_x, "batchnorm_backward");
  return r;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  return max_with_zero(x);
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_y, const Tensor<T>& x) {
  require_same_shape(grad_y.shape(), x.shape(), "relu_backward");
  Tensor<T> gx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) gx[i] = x[i] > T{0} ? grad_y[i] : T{0};
  return gx;
}

template <typename T>
Tensor<T> global_avg_pool_forward(const Tensor<T>& x) {
  require_rank(x.shape(), 3, "global_avg_pool input");
  return reduce(ReduceOp::mean, x, 1);
}

template <typename T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& grad_y, const Shape& input_shape) {
  const std::size_t batch = input_shape[0], time = input_shape[1], ch = input_shape[2];
  require_same_shape(grad_y.shape(), Shape{batch, 1, ch}, "global_avg_pool_backward");
  Tensor<T> gx(input_shape);
  const T inv = T{1} / static_cast<T>(time);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < time; ++t) {
      for (std::size_t c = 0; c < ch; ++c) gx.at(b, t, c) = grad_y.at(b, 0, c) * inv;
    }
  }
  return gx;
}

template <typename T>
Tensor<T> pad_channels_forward(const Tensor<T>& x, std::size_t out_channels) {
  require_rank(x.shape(), 3, "pad_channels input");
  const std::size_t in_ch = x.dim(2);
  if (out_channels < in_ch) {
    throw ShapeError("pad_channels: cannot shrink " + std::to_string(in_ch) + " channels to " +
                     std::to_string(out_channels));
  }
  Tensor<T> y(Shape{x.dim(0), x.dim(1), out_channels});
  const std::size_t rows = x.dim(0) * x.dim(1);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t c = 0; c < in_ch; ++c) y[i * out_channels + c] = x[i * in_ch + c];
  }
  return y;
}

template <typename T>
Tensor<T> pad_channels_backward(const Tensor<T>& grad_y, std::size_t in_channels) {
  const std::size_t out_ch = grad_y.dim(2);
  Tensor<T> gx(Shape{grad_y.dim(0), grad_y.dim(1), in_channels});
  const std::size_t rows = grad_y.dim(0) * grad_y.dim(1);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t c = 0; c < in_channels; ++c) gx[i * in_channels + c] = grad_y[i * out_ch + c];
  }
  return gx;
}

template <typename T>
DropoutForward<T> dropout_forward(const Tensor<T>& x, double rate, Mode mode, RandomSource& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout: rate must lie in [0, 1)");
  if (mode == Mode::infer || rate == 0.0) return DropoutForward<T>{x, Tensor<T>()};
  DropoutForward<T> r{Tensor<T>(x.shape()), Tensor<T>(x.shape())};
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T m = rng.uniform() < rate ? T{0} : keep_scale;
    r.mask[i] = m;
    r.y[i] = x[i] * m;
  }
  return r;
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& grad_y, const Tensor<T>& mask) {
  if (mask.empty()) return grad_y;
  return mul(grad_y, mask);
}

template <typename T>
Tensor<T> linear_forward(const Tensor<T>& x, const Tensor<T>& w, const std::type_identity_t<Tensor<T>>* bias) {
  require_rank(x.shape(), 2, "linear input");
  require_rank(w.shape(), 2, "linear weight");
  const std::size_t batch = x.dim(0), in = x.dim(1), out = w.dim(1);
  if (w.dim(0) != in) {
    throw ShapeError("linear: input " + x.shape().to_string() + " incompatible with weight " + w.shape().to_string());
  }
  if (bias && bias->shape() != Shape{out}) throw ShapeError("linear: bias shape " + bias->shape().to_string());
  Tensor<T> y(Shape{batch, out});
  parallel_for(batch, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      T* yr = y.raw() + b * out;
      const T* xr = x.raw() + b * in;
      for (std::size_t i = 0; i < in; ++i) {
        const T xv = xr[i];
        const T* wr = w.raw() + i * out;
        for (std::size_t o = 0; o < out; ++o) yr[o] += xv * wr[o];
      }
      if (bias) {
        for (std::size_t o = 0; o < out; ++o) yr[o] += (*bias)[o];
      }
    }
  });
  check_finite(y, "linear_forward");
  return y;
}

template <typename T>
LinearGrads<T> linear_backward(const Tensor<T>& grad_y, const Tensor<T>& x, const Tensor<T>& w, bool with_bias) {
  const std::size_t batch = x.dim(0), in = x.dim(1), out = w.dim(1);
  require_same_shape(grad_y.shape(), Shape{batch, out}, "linear_backward grad_y");
  LinearGrads<T> r{Tensor<T>(x.shape()), Tensor<T>(w.shape()), Tensor<T>()};
  for (std::size_t b = 0; b < batch; ++b) {
    const T* g = grad_y.raw() + b * out;
    for (std::size_t i = 0; i < in; ++i) {
      const T* wr = w.raw() + i * out;
      T s = 0;
      for (std::size_t o = 0; o < out; ++o) s += g[o] * wr[o];
      r.grad_x[b * in + i] = s;
    }
  }
  parallel_for(in, [&](std::size_t i0, std::size_t i1) {
    for (std::size_t b = 0; b < batch; ++b) {
      const T* g = grad_y.raw() + b * out;
      for (std::size_t i = i0; i < i1; ++i) {
        const T xv = x[b * in + i];
        T* gw = r.grad_w.raw() + i * out;
        for (std::size_t o = 0; o < out; ++o) gw[o] += xv * g[o];
      }
    }
  });
  if (with_bias) {
    r.grad_bias = Tensor<T>(Shape{out});
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t o = 0; o < out; ++o) r.grad_bias[o] += grad_y[b * out + o];
    }
  }
  return r;
}

template <typename T>
SoftmaxXent<T> softmax_xent_forward(const Tensor<T>& logits, std::span<const int> labels) {
  require_rank(logits.shape(), 2, "softmax logits");
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  if (labels.size() != batch) throw ShapeError("softmax_xent: label count does not match batch");
  SoftmaxXent<T> r{0.0, Tensor<T>(logits.shape())};
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const int label = labels[b];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw ConfigError("softmax_xent: label " + std::to_string(label) + " outside [0, " + std::to_string(classes) +
                        ")");
    }
    const T* z = logits.raw() + b * classes;
    double zmax = z[0];
    for (std::size_t k = 1; k < classes; ++k) zmax = std::max<double>(zmax, z[k]);
    double denom = 0.0;
    for (std::size_t k = 0; k < classes; ++k) denom += std::exp(z[k] - zmax);
    const double log_denom = std::log(denom);
    for (std::size_t k = 0; k < classes; ++k) {
      r.probabilities[b * classes + k] = static_cast<T>(std::exp(z[k] - zmax - log_denom));
    }
    total += -(z[label] - zmax - log_denom);
  }
  r.loss = total / static_cast<double>(batch);
  check_finite(r.probabilities, "softmax_xent_forward");
  if (!std::isfinite(r.loss)) throw NonFiniteError("softmax_xent_forward: non-finite loss");
  return r;
}

template <typename T>
Tensor<T> softmax_xent_backward(const Tensor<T>& probabilities, std::span<const int> labels, T grad_loss) {
  const std::size_t batch = probabilities.dim(0), classes = probabilities.dim(1);
  Tensor<T> g = probabilities;
  for (std::size_t b = 0; b < batch; ++b) g[b * classes + static_cast<std::size_t>(labels[b])] -= T{1};
  const T s = grad_loss / static_cast<T>(batch);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= s;
  return g;
}

template <typename T>
SoftmaxXent<T> dense_softmax_xent(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                                  std::span<const int> labels) {
  return softmax_xent_forward(linear_forward(x, w, &b), labels);
}

template <typename T>
LinearGrads<T> dense_softmax_xent_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& probabilities,
                                           std::span<const int> labels) {
  return linear_backward(softmax_xent_backward(probabilities, labels), x, w, true);
}

#define WAVECNN_INSTANTIATE(T)                                                                                   \
  template Tensor<T> conv1d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*, std::size_t);       \
  template ConvGrads<T> conv1d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, bool, std::size_t); \
  template MaxPoolResult<T> maxpool1d_forward(const Tensor<T>&, std::size_t);                                    \
  template Tensor<T> maxpool1d_backward(const Tensor<T>&, std::span<const std::uint32_t>, const Shape&);         \
  template struct BatchNormStats<T>;                                                                             \
  template struct BatchNormState<T>;                                                                             \
  template BatchNormForward<T> batchnorm_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,          \
                                                 BatchNormStats<T>&, const BatchNormConfig&, Mode);              \
  template BatchNormGrads<T> batchnorm_backward(const Tensor<T>&, const BatchNormCache<T>&, const Tensor<T>&);  \
  template Tensor<T> relu_forward(const Tensor<T>&);                                                             \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                                          \
  template Tensor<T> global_avg_pool_forward(const Tensor<T>&);                                                  \
  template Tensor<T> global_avg_pool_backward(const Tensor<T>&, const Shape&);                                   \
  template Tensor<T> pad_channels_forward(const Tensor<T>&, std::size_t);                                        \
  template Tensor<T> pad_channels_backward(const Tensor<T>&, std::size_t);                                       \
  template DropoutForward<T> dropout_forward(const Tensor<T>&, double, Mode, RandomSource&);                     \
  template Tensor<T> dropout_backward(const Tensor<T>&, const Tensor<T>&);                                       \
  template Tensor<T> linear_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*);                       \
  template LinearGrads<T> linear_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, bool);           \
  template SoftmaxXent<T> softmax_xent_forward(const Tensor<T>&, std::span<const int>);                          \
  template Tensor<T> softmax_xent_backward(const Tensor<T>&, std::span<const int>, T);                           \
  template SoftmaxXent<T> dense_softmax_xent(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,              \
                                             std::span<const int>);                                              \
  template LinearGrads<T> dense_softmax_xent_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,     \
                                                      std::span<const int>);

WAVECNN_INSTANTIATE(float)
WAVECNN_INSTANTIATE(double)

#undef WAVECNN_INSTANTIATE

}  // namespace wavecnn
