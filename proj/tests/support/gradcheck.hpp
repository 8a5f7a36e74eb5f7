// SPDX-License-Identifier: Apache-2.0
//
// Randomized finite-difference trials, one per layer op. Each trial draws a
// small random shape, compares the analytic backward against central
// differences in 64-bit, and returns the worst relative error over all
// gradients the op produces.

#pragma once

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "wavecnn/autograd.hpp"
#include "wavecnn/nn_ops.hpp"

namespace wavecnn::testing {

inline constexpr double kFiniteDifferenceStep = 1e-5;

inline std::size_t pick(RandomSource& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.index(hi - lo + 1));
}

/// Uniform in [-1, 1] but kept away from zero so ReLU kinks are never straddled.
inline TensorD away_from_zero(Shape shape, RandomSource& rng) {
  TensorD t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) {
    double v = 0;
    while (std::abs(v) < 1e-2) v = rng.uniform(-1.0, 1.0);
    t[i] = v;
  }
  return t;
}

inline double worst(const std::vector<TensorD>& analytic, const std::vector<TensorD>& numeric) {
  double e = 0;
  for (std::size_t i = 0; i < analytic.size(); ++i) e = std::max(e, relative_error(analytic[i], numeric[i]));
  return e;
}

inline double conv1d_trial(RandomSource& rng, std::size_t batch, std::size_t time, std::size_t in_ch,
                           std::size_t rf, std::size_t stride, std::size_t out_ch, bool with_bias) {
  TensorD x = random_tensor<double>(Shape{batch, time, in_ch}, rng);
  TensorD k = random_tensor<double>(Shape{rf, in_ch, out_ch}, rng);
  TensorD b = random_tensor<double>(Shape{out_ch}, rng);
  const std::size_t out_time = (time + stride - 1) / stride;
  TensorD w = random_tensor<double>(Shape{batch, out_time, out_ch}, rng);
  auto f = [&](const std::vector<TensorD>& in) {
    return probe(conv1d_forward(in[0], in[1], with_bias ? &in[2] : nullptr, stride), w);
  };
  ConvGrads<double> g = conv1d_backward(w, x, k, with_bias, stride);
  std::vector<TensorD> analytic = {g.grad_x, g.grad_kernel};
  if (with_bias) analytic.push_back(g.grad_bias);
  std::vector<TensorD> numeric = numeric_gradients(f, {x, k, b}, kFiniteDifferenceStep);
  if (!with_bias) numeric.pop_back();
  return worst(analytic, numeric);
}

inline double conv1d_trial(RandomSource& rng) {
  return conv1d_trial(rng, pick(rng, 1, 3), pick(rng, 1, 13), pick(rng, 1, 3), pick(rng, 1, 5), pick(rng, 1, 4),
                      pick(rng, 1, 3), rng.uniform() < 0.5);
}

inline double maxpool_trial(RandomSource& rng) {
  const Shape s{pick(rng, 1, 3), pick(rng, 1, 17), pick(rng, 1, 3)};
  TensorD x = random_tensor<double>(s, rng);
  MaxPoolResult<double> fwd = maxpool1d_forward(x);
  TensorD w = random_tensor<double>(fwd.out.shape(), rng);
  auto f = [&](const std::vector<TensorD>& in) { return probe(maxpool1d_forward(in[0]).out, w); };
  return worst({maxpool1d_backward(w, fwd.argmax, s)}, numeric_gradients(f, {x}, kFiniteDifferenceStep));
}

inline double batchnorm_trial(RandomSource& rng, Mode mode) {
  const std::size_t ch = pick(rng, 1, 4);
  const Shape s{pick(rng, 2, 4), pick(rng, 1, 16), ch};
  TensorD x = random_tensor<double>(s, rng, -2.0, 2.0);
  TensorD gamma = random_tensor<double>(Shape{ch}, rng, 0.5, 1.5);
  TensorD beta = random_tensor<double>(Shape{ch}, rng);
  TensorD w = random_tensor<double>(s, rng);
  BatchNormStats<double> stats{random_tensor<double>(Shape{ch}, rng), random_tensor<double>(Shape{ch}, rng, 0.5, 2.0)};
  const BatchNormConfig config;
  auto f = [&](const std::vector<TensorD>& in) {
    BatchNormStats<double> scratch = stats;
    return probe(batchnorm_forward(in[0], in[1], in[2], scratch, config, mode).y, w);
  };
  BatchNormStats<double> scratch = stats;
  BatchNormForward<double> fwd = batchnorm_forward(x, gamma, beta, scratch, config, mode);
  BatchNormGrads<double> g = batchnorm_backward(w, fwd.cache, gamma);
  return worst({g.grad_x, g.grad_gamma, g.grad_beta}, numeric_gradients(f, {x, gamma, beta}, kFiniteDifferenceStep));
}

inline double relu_trial(RandomSource& rng) {
  const Shape s{pick(rng, 1, 3), pick(rng, 1, 9), pick(rng, 1, 4)};
  TensorD x = away_from_zero(s, rng);
  TensorD w = random_tensor<double>(s, rng);
  auto f = [&](const std::vector<TensorD>& in) { return probe(relu_forward(in[0]), w); };
  return worst({relu_backward(w, x)}, numeric_gradients(f, {x}, kFiniteDifferenceStep));
}

inline double global_avg_pool_trial(RandomSource& rng) {
  const Shape s{pick(rng, 1, 3), pick(rng, 1, 12), pick(rng, 1, 4)};
  TensorD x = random_tensor<double>(s, rng);
  TensorD w = random_tensor<double>(Shape{s[0], 1, s[2]}, rng);
  auto f = [&](const std::vector<TensorD>& in) { return probe(global_avg_pool_forward(in[0]), w); };
  return worst({global_avg_pool_backward(w, s)}, numeric_gradients(f, {x}, kFiniteDifferenceStep));
}

inline double pad_channels_trial(RandomSource& rng) {
  const Shape s{pick(rng, 1, 3), pick(rng, 1, 9), pick(rng, 1, 4)};
  const std::size_t out_ch = s[2] + pick(rng, 0, 4);
  TensorD x = random_tensor<double>(s, rng);
  TensorD w = random_tensor<double>(Shape{s[0], s[1], out_ch}, rng);
  auto f = [&](const std::vector<TensorD>& in) { return probe(pad_channels_forward(in[0], out_ch), w); };
  return worst({pad_channels_backward(w, s[2])}, numeric_gradients(f, {x}, kFiniteDifferenceStep));
}

inline double dropout_trial(RandomSource& rng) {
  const Shape s{pick(rng, 1, 3), pick(rng, 1, 9), pick(rng, 1, 4)};
  TensorD x = random_tensor<double>(s, rng);
  TensorD w = random_tensor<double>(s, rng);
  const std::uint64_t mask_seed = rng.next_u64();
  auto f = [&](const std::vector<TensorD>& in) {
    RandomSource mask_rng(mask_seed);
    return probe(dropout_forward(in[0], 0.3, Mode::train, mask_rng).y, w);
  };
  RandomSource mask_rng(mask_seed);
  DropoutForward<double> fwd = dropout_forward(x, 0.3, Mode::train, mask_rng);
  return worst({dropout_backward(w, fwd.mask)}, numeric_gradients(f, {x}, kFiniteDifferenceStep));
}

inline double linear_trial(RandomSource& rng) {
  const std::size_t batch = pick(rng, 1, 4), in = pick(rng, 1, 6), out = pick(rng, 1, 5);
  TensorD x = random_tensor<double>(Shape{batch, in}, rng);
  TensorD wt = random_tensor<double>(Shape{in, out}, rng);
  TensorD b = random_tensor<double>(Shape{out}, rng);
  TensorD w = random_tensor<double>(Shape{batch, out}, rng);
  auto f = [&](const std::vector<TensorD>& v) { return probe(linear_forward(v[0], v[1], &v[2]), w); };
  LinearGrads<double> g = linear_backward(w, x, wt, true);
  return worst({g.grad_x, g.grad_w, g.grad_bias}, numeric_gradients(f, {x, wt, b}, kFiniteDifferenceStep));
}

inline double dense_softmax_xent_trial(RandomSource& rng, std::size_t batch, std::size_t in, std::size_t classes) {
  TensorD x = random_tensor<double>(Shape{batch, in}, rng, -2.0, 2.0);
  TensorD wt = random_tensor<double>(Shape{in, classes}, rng);
  TensorD b = random_tensor<double>(Shape{classes}, rng);
  std::vector<int> labels(batch);
  for (int& l : labels) l = static_cast<int>(rng.index(classes));
  auto f = [&](const std::vector<TensorD>& v) { return dense_softmax_xent(v[0], v[1], v[2], labels).loss; };
  SoftmaxXent<double> fwd = dense_softmax_xent(x, wt, b, labels);
  LinearGrads<double> g = dense_softmax_xent_backward(x, wt, fwd.probabilities, labels);
  return worst({g.grad_x, g.grad_w, g.grad_bias}, numeric_gradients(f, {x, wt, b}, kFiniteDifferenceStep));
}

inline double dense_softmax_xent_trial(RandomSource& rng) {
  return dense_softmax_xent_trial(rng, pick(rng, 1, 4), pick(rng, 1, 6), pick(rng, 2, 5));
}

/// Residual block through the tape: gradients for the input and all eight
/// block parameters.
inline double residual_block_trial(RandomSource& rng) {
  const std::size_t in_ch = pick(rng, 1, 3);
  const std::size_t out_ch = in_ch + pick(rng, 0, 2);
  const Shape s{pick(rng, 2, 3), pick(rng, 2, 10), in_ch};
  std::vector<TensorD> inputs = {
      random_tensor<double>(s, rng),
      random_tensor<double>(Shape{3, in_ch, out_ch}, rng),
      random_tensor<double>(Shape{out_ch}, rng, 0.5, 1.5),
      random_tensor<double>(Shape{out_ch}, rng),
      random_tensor<double>(Shape{3, out_ch, out_ch}, rng),
      random_tensor<double>(Shape{out_ch}, rng, 0.5, 1.5),
      random_tensor<double>(Shape{out_ch}, rng),
  };
  TensorD w = random_tensor<double>(Shape{s[0], s[1], out_ch}, rng);
  const BatchNormConfig config;

  auto run = [&](const std::vector<TensorD>& in, std::vector<TensorD>* grads) {
    Tape<double> tape;
    BatchNormStats<double> st1, st2;
    std::vector<TensorD> sinks(in.size());
    std::vector<Var> vars;
    for (std::size_t i = 0; i < in.size(); ++i) vars.push_back(tape.parameter(in[i], &sinks[i]));
    Var h = ag::conv1d(tape, vars[0], vars[1], std::nullopt, 1);
    h = ag::batchnorm(tape, h, vars[2], vars[3], st1, config, Mode::train);
    h = ag::relu(tape, h);
    h = ag::conv1d(tape, h, vars[4], std::nullopt, 1);
    h = ag::batchnorm(tape, h, vars[5], vars[6], st2, config, Mode::train);
    const Var y = ag::relu(tape, ag::add(tape, h, ag::pad_channels(tape, vars[0], out_ch)));
    const double value = probe(tape.value(y), w);
    if (grads) {
      tape.backward(y, w);
      for (std::size_t i = 0; i < sinks.size(); ++i) {
        if (sinks[i].empty()) sinks[i] = TensorD(in[i].shape());
      }
      *grads = std::move(sinks);
    }
    return value;
  };
  std::vector<TensorD> analytic;
  run(inputs, &analytic);
  std::vector<TensorD> numeric =
      numeric_gradients([&](const std::vector<TensorD>& in) { return run(in, nullptr); }, inputs,
                        kFiniteDifferenceStep);
  return worst(analytic, numeric);
}

struct GradientOp {
  std::string name;
  std::function<double(RandomSource&)> trial;
};

inline std::vector<GradientOp> gradient_ops() {
  return {
      {"conv1d", [](RandomSource& r) { return conv1d_trial(r); }},
      {"maxpool1d", maxpool_trial},
      {"batchnorm(train)", [](RandomSource& r) { return batchnorm_trial(r, Mode::train); }},
      {"batchnorm(infer)", [](RandomSource& r) { return batchnorm_trial(r, Mode::infer); }},
      {"relu", relu_trial},
      {"global_avg_pool", global_avg_pool_trial},
      {"pad_channels", pad_channels_trial},
      {"dropout", dropout_trial},
      {"linear", linear_trial},
      {"dense_softmax_xent", [](RandomSource& r) { return dense_softmax_xent_trial(r); }},
      {"residual_block", residual_block_trial},
  };
}

}  // namespace wavecnn::testing
