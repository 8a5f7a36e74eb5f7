// SPDX-License-Identifier: Apache-2.0

#include "wavecnn/autograd.hpp"

#include <memory>
#include <utility>

namespace wavecnn {

template <typename T>
Var Tape<T>::input(Tensor<T> value) {
  Node n;
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::parameter(const Tensor<T>& value, Tensor<T>* grad_sink) {
  Node n;
  n.external = &value;
  n.grad_sink = grad_sink;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::push(Tensor<T> value, BackwardFn backward) {
  Node n;
  n.owned = std::move(value);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <typename T>
const Tensor<T>& Tape<T>::value(Var v) const {
  const Node& n = nodes_[v.id];
  return n.external ? *n.external : n.owned;
}

template <typename T>
void Tape<T>::accumulate(Var v, Tensor<T> g) {
  Node& n = nodes_[v.id];
  require_same_shape(g.shape(), value(v).shape(), "tape gradient");
  Tensor<T>& target = n.grad_sink ? *n.grad_sink : n.grad;
  if (target.empty()) {
    target = std::move(g);
  } else {
    target += g;
  }
}

template <typename T>
void Tape<T>::backward(Var root, Tensor<T> seed) {
  accumulate(root, std::move(seed));
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, n.grad);
    n.grad = Tensor<T>();
  }
}

namespace ag {

template <typename T>
Var conv1d(Tape<T>& tape, Var x, Var kernel, std::optional<Var> bias, std::size_t stride) {
  const Tensor<T>* b = bias ? &tape.value(*bias) : nullptr;
  Tensor<T> y = conv1d_forward(tape.value(x), tape.value(kernel), b, stride);
  return tape.push(std::move(y), [x, kernel, bias, stride](Tape<T>& t, const Tensor<T>& g) {
    ConvGrads<T> grads = conv1d_backward(g, t.value(x), t.value(kernel), bias.has_value(), stride);
    t.accumulate(x, std::move(grads.grad_x));
    t.accumulate(kernel, std::move(grads.grad_kernel));
    if (bias) t.accumulate(*bias, std::move(grads.grad_bias));
  });
}

template <typename T>
Var batchnorm(Tape<T>& tape, Var x, Var gamma, Var beta, BatchNormStats<T>& stats, const BatchNormConfig& config,
              Mode mode) {
  BatchNormForward<T> f = batchnorm_forward(tape.value(x), tape.value(gamma), tape.value(beta), stats, config, mode);
  auto cache = std::make_shared<BatchNormCache<T>>(std::move(f.cache));
  return tape.push(std::move(f.y), [x, gamma, beta, cache](Tape<T>& t, const Tensor<T>& g) {
    BatchNormGrads<T> grads = batchnorm_backward(g, *cache, t.value(gamma));
    t.accumulate(x, std::move(grads.grad_x));
    t.accumulate(gamma, std::move(grads.grad_gamma));
    t.accumulate(beta, std::move(grads.grad_beta));
  });
}

template <typename T>
Var relu(Tape<T>& tape, Var x) {
  return tape.push(relu_forward(tape.value(x)), [x](Tape<T>& t, const Tensor<T>& g) {
    t.accumulate(x, relu_backward(g, t.value(x)));
  });
}

template <typename T>
Var maxpool(Tape<T>& tape, Var x, std::size_t window) {
  MaxPoolResult<T> r = maxpool1d_forward(tape.value(x), window);
  auto argmax = std::make_shared<std::vector<std::uint32_t>>(std::move(r.argmax));
  return tape.push(std::move(r.out), [x, argmax](Tape<T>& t, const Tensor<T>& g) {
    t.accumulate(x, maxpool1d_backward(g, *argmax, t.value(x).shape()));
  });
}

template <typename T>
Var global_avg_pool(Tape<T>& tape, Var x) {
  return tape.push(global_avg_pool_forward(tape.value(x)), [x](Tape<T>& t, const Tensor<T>& g) {
    t.accumulate(x, global_avg_pool_backward(g, t.value(x).shape()));
  });
}

template <typename T>
Var pad_channels(Tape<T>& tape, Var x, std::size_t out_channels) {
  const std::size_t in_channels = tape.value(x).dim(2);
  if (in_channels == out_channels) return x;
  return tape.push(pad_channels_forward(tape.value(x), out_channels), [x, in_channels](Tape<T>& t, const Tensor<T>& g) {
    t.accumulate(x, pad_channels_backward(g, in_channels));
  });
}

template <typename T>
Var add(Tape<T>& tape, Var a, Var b) {
  return tape.push(wavecnn::add(tape.value(a), tape.value(b)), [a, b](Tape<T>& t, const Tensor<T>& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

template <typename T>
Var reshape(Tape<T>& tape, Var x, Shape shape) {
  return tape.push(tape.value(x).reshaped(std::move(shape)), [x](Tape<T>& t, const Tensor<T>& g) {
    t.accumulate(x, g.reshaped(t.value(x).shape()));
  });
}

template <typename T>
Var linear(Tape<T>& tape, Var x, Var w, std::optional<Var> bias) {
  const Tensor<T>* b = bias ? &tape.value(*bias) : nullptr;
  Tensor<T> y = linear_forward(tape.value(x), tape.value(w), b);
  return tape.push(std::move(y), [x, w, bias](Tape<T>& t, const Tensor<T>& g) {
    LinearGrads<T> grads = linear_backward(g, t.value(x), t.value(w), bias.has_value());
    t.accumulate(x, std::move(grads.grad_x));
    t.accumulate(w, std::move(grads.grad_w));
    if (bias) t.accumulate(*bias, std::move(grads.grad_bias));
  });
}

template <typename T>
Var dropout(Tape<T>& tape, Var x, double rate, Mode mode, RandomSource& rng) {
  DropoutForward<T> f = dropout_forward(tape.value(x), rate, mode, rng);
  auto mask = std::make_shared<Tensor<T>>(std::move(f.mask));
  return tape.push(std::move(f.y), [x, mask](Tape<T>& t, const Tensor<T>& g) {
    t.accumulate(x, dropout_backward(g, *mask));
  });
}

template <typename T>
LossVars<T> softmax_xent(Tape<T>& tape, Var logits, std::span<const int> labels) {
  SoftmaxXent<T> r = softmax_xent_forward(tape.value(logits), labels);
  auto probs = std::make_shared<Tensor<T>>(r.probabilities);
  auto saved_labels = std::make_shared<std::vector<int>>(labels.begin(), labels.end());
  Var loss = tape.push(Tensor<T>(Shape{1}, static_cast<T>(r.loss)),
                       [logits, probs, saved_labels](Tape<T>& t, const Tensor<T>& g) {
                         t.accumulate(logits, softmax_xent_backward(*probs, *saved_labels, g[0]));
                       });
  return LossVars<T>{loss, std::move(r.probabilities)};
}

}  // namespace ag

template <typename T>
Tensor<T> residual_block_forward(const Tensor<T>& x, ResidualBlockParams<T>& block, Mode mode) {
  if (block.out_channels() < block.in_channels()) {
    throw ShapeError("residual block cannot reduce channels");
  }
  Tape<T> tape;
  auto param = [&](const Tensor<T>& p) { return tape.parameter(p, nullptr); };
  auto bias_of = [&](const ConvParams<T>& c) -> std::optional<Var> {
    return c.has_bias() ? std::optional<Var>(param(c.bias)) : std::nullopt;
  };
  const Var in = tape.input(x);
  Var h = ag::conv1d(tape, in, param(block.conv1.kernel), bias_of(block.conv1), block.conv1.stride);
  h = ag::batchnorm(tape, h, param(block.bn1.gamma), param(block.bn1.beta), block.bn1.stats, block.bn1.config, mode);
  h = ag::relu(tape, h);
  h = ag::conv1d(tape, h, param(block.conv2.kernel), bias_of(block.conv2), block.conv2.stride);
  h = ag::batchnorm(tape, h, param(block.bn2.gamma), param(block.bn2.beta), block.bn2.stats, block.bn2.config, mode);
  const Var shortcut = ag::pad_channels(tape, in, block.out_channels());
  const Var y = ag::relu(tape, ag::add(tape, h, shortcut));
  return tape.value(y);
}

#define WAVECNN_INSTANTIATE(T)                                                                                   \
  template class Tape<T>;                                                                                        \
  template Var ag::conv1d(Tape<T>&, Var, Var, std::optional<Var>, std::size_t);                                  \
  template Var ag::batchnorm(Tape<T>&, Var, Var, Var, BatchNormStats<T>&, const BatchNormConfig&, Mode);         \
  template Var ag::relu(Tape<T>&, Var);                                                                          \
  template Var ag::maxpool(Tape<T>&, Var, std::size_t);                                                          \
  template Var ag::global_avg_pool(Tape<T>&, Var);                                                               \
  template Var ag::pad_channels(Tape<T>&, Var, std::size_t);                                                     \
  template Var ag::add(Tape<T>&, Var, Var);                                                                      \
  template Var ag::reshape(Tape<T>&, Var, Shape);                                                                \
  template Var ag::linear(Tape<T>&, Var, Var, std::optional<Var>);                                               \
  template Var ag::dropout(Tape<T>&, Var, double, Mode, RandomSource&);                                          \
  template ag::LossVars<T> ag::softmax_xent(Tape<T>&, Var, std::span<const int>);                                \
  template Tensor<T> residual_block_forward(const Tensor<T>&, ResidualBlockParams<T>&, Mode);

WAVECNN_INSTANTIATE(float)
WAVECNN_INSTANTIATE(double)

#undef WAVECNN_INSTANTIATE

}  // namespace wavecnn
