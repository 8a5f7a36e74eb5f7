// SPDX-License-Identifier: Apache-2.0
//
// Tape-based reverse-mode differentiation over the layer ops in nn_ops.hpp.
// Every differentiable call appends one node holding its output and a
// backward closure over the intermediates it saved. backward() walks the
// nodes in exact reverse order; gradients reaching a node from several
// consumers are summed.

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "wavecnn/nn_ops.hpp"

namespace wavecnn {

struct Var {
  std::size_t id = 0;
};

template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor<T>& grad_out)>;

  /// Leaf holding a copy of `value`; its gradient is kept on the tape.
  Var input(Tensor<T> value);

  /// Leaf referencing an external parameter. Gradients are added into
  /// `grad_sink`, which must outlive backward(). The value is not copied.
  Var parameter(const Tensor<T>& value, Tensor<T>* grad_sink);

  Var push(Tensor<T> value, BackwardFn backward);

  const Tensor<T>& value(Var v) const;
  /// Empty if no gradient reached `v`. Interior node gradients are released
  /// once propagated, so after backward() only leaves keep theirs.
  const Tensor<T>& grad(Var v) const { return nodes_[v.id].grad; }

  void accumulate(Var v, Tensor<T> g);

  /// Seeds `root` with `seed` and propagates to every leaf.
  void backward(Var root, Tensor<T> seed);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> owned;
    const Tensor<T>* external = nullptr;
    Tensor<T> grad;
    Tensor<T>* grad_sink = nullptr;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

namespace ag {

template <typename T>
Var conv1d(Tape<T>& tape, Var x, Var kernel, std::optional<Var> bias, std::size_t stride);

template <typename T>
Var batchnorm(Tape<T>& tape, Var x, Var gamma, Var beta, BatchNormStats<T>& stats, const BatchNormConfig& config,
              Mode mode);

template <typename T>
Var relu(Tape<T>& tape, Var x);

template <typename T>
Var maxpool(Tape<T>& tape, Var x, std::size_t window = kPoolWindow);

template <typename T>
Var global_avg_pool(Tape<T>& tape, Var x);

template <typename T>
Var pad_channels(Tape<T>& tape, Var x, std::size_t out_channels);

template <typename T>
Var add(Tape<T>& tape, Var a, Var b);

template <typename T>
Var reshape(Tape<T>& tape, Var x, Shape shape);

template <typename T>
Var linear(Tape<T>& tape, Var x, Var w, std::optional<Var> bias);

template <typename T>
Var dropout(Tape<T>& tape, Var x, double rate, Mode mode, RandomSource& rng);

template <typename T>
struct LossVars {
  Var loss;  // shape [1]
  Tensor<T> probabilities;
};

template <typename T>
LossVars<T> softmax_xent(Tape<T>& tape, Var logits, std::span<const int> labels);

}  // namespace ag

/// One residual block: conv -> BN -> ReLU -> conv -> BN, added to the
/// (channel zero-padded) input, then ReLU.
template <typename T>
struct ResidualBlockParams {
  ConvParams<T> conv1;
  BatchNormState<T> bn1;
  ConvParams<T> conv2;
  BatchNormState<T> bn2;

  std::size_t in_channels() const { return conv1.kernel.dim(1); }
  std::size_t out_channels() const { return conv2.kernel.dim(2); }
};

template <typename T>
Tensor<T> residual_block_forward(const Tensor<T>& x, ResidualBlockParams<T>& block, Mode mode);

}  // namespace wavecnn
