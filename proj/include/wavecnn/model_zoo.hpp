// SPDX-License-Identifier: Apache-2.0
//
// Architecture catalog and executable model graphs.
//
// Supported names are a base followed by optional suffixes:
//   bases     m3, m5, m11, m18, m34-res, m34 (plain stack, only as m34-no-bn)
//   suffixes  -fc       flatten + two 1000-wide FC layers (BN, ReLU, dropout 0.3)
//             -big      all filter counts x1.5 (m3) or x2 (m5)
//             -srf/-lrf first-layer receptive field 8 / 320
//             -no-bn    no batch normalization; every conv and FC gets a bias
//             -stride1  first-layer stride 1 instead of 4
// e.g. "m18-lrf", "m11-stride1", "m34-res-no-bn".

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "wavecnn/autograd.hpp"
#include "wavecnn/nn_ops.hpp"
#include "wavecnn/random.hpp"

namespace wavecnn {

inline constexpr std::size_t kClipSamples = 32000;
inline constexpr std::size_t kFcWidth = 1000;
inline constexpr double kFcDropout = 0.3;

enum class LayerKind { conv, maxpool4, resblock_group, global_avg_pool, dense_softmax, fc_block };

struct LayerSpec {
  LayerKind kind = LayerKind::conv;
  std::size_t rf = 0;
  std::size_t stride = 1;
  std::size_t out_channels = 0;
  std::size_t repeat = 1;  // stacked convs, residual blocks, or FC layers
  bool with_bn = true;
};

struct BuildOptions {
  std::size_t num_classes = 10;
  /// Divides every filter count (rounding down, minimum 1). Used for the
  /// reduced-width desk-scale runs; 1 reproduces the published sizes.
  std::size_t width_divisor = 1;
  /// Input length the -fc head's flatten is sized for.
  std::size_t input_time = kClipSamples;
};

struct ArchitectureSpec {
  std::string name;
  std::vector<LayerSpec> layers;
  std::size_t num_classes = 10;
  std::size_t width_divisor = 1;
  std::size_t input_time = kClipSamples;
  /// Weight-layer count implied by the name (M18 -> 18, plus 2 for -fc).
  std::size_t declared_weight_layers = 0;

  /// conv + FC + dense layers actually present.
  std::size_t weight_layer_count() const;
  std::size_t conv_count() const;
  bool has_batchnorm() const;
};

/// Throws ConfigError for unknown names or invalid suffix combinations.
ArchitectureSpec architecture(std::string_view name, const BuildOptions& options = {});

/// Canonical names of every base model and published variant.
std::vector<std::string> published_architectures();

struct ShapeTraceRow {
  std::string layer;
  Shape output;
};

/// Symbolic forward over shapes only (batch 1).
std::vector<ShapeTraceRow> shape_trace(const ArchitectureSpec& spec, std::size_t input_time);

struct ParameterGroup {
  std::string layer;  // conv<i>, fc<i> or dense, matching the graph's parameter prefixes
  std::uint64_t count = 0;
};

/// Per weight layer, including its bias or BN scale and shift.
std::vector<ParameterGroup> parameter_breakdown(const ArchitectureSpec& spec);

/// Trainable element count from the architecture alone (running stats excluded).
std::uint64_t count_parameters(const ArchitectureSpec& spec);

/// "0.2M", "1.8M", "4M", "129M": one decimal below 10M with a trailing ".0"
/// dropped, whole millions above.
std::string rounded_millions(std::uint64_t count);

enum class ParamKind { conv_kernel, bias, bn_gamma, bn_beta, fc_weight, dense_weight };

template <typename T>
struct Parameter {
  std::string name;
  ParamKind kind = ParamKind::conv_kernel;
  Tensor<T> value;
  Tensor<T> grad;  // empty until a backward pass reaches it

  bool is_batchnorm() const { return kind == ParamKind::bn_gamma || kind == ParamKind::bn_beta; }
};

template <typename T>
struct RunningStats {
  std::string name;  // e.g. "conv3.bn"
  BatchNormStats<T> stats;
};

template <typename T>
struct StepResult {
  double loss = 0.0;
  Tensor<T> probabilities;
};

template <typename T>
class BasicModelGraph {
 public:
  static BasicModelGraph build(std::string_view name, const BuildOptions& options, RandomSource& rng);
  static BasicModelGraph build(const ArchitectureSpec& spec, RandomSource& rng);

  const ArchitectureSpec& spec() const { return spec_; }
  const std::string& name() const { return spec_.name; }
  std::size_t num_classes() const { return spec_.num_classes; }

  Mode mode() const { return mode_; }
  void set_mode(Mode mode) { mode_ = mode; }

  std::span<Parameter<T>> parameters() { return params_; }
  std::span<const Parameter<T>> parameters() const { return params_; }
  Parameter<T>* find_parameter(std::string_view name);
  const Parameter<T>* find_parameter(std::string_view name) const;

  std::span<RunningStats<T>> running_stats() { return stats_; }
  std::span<const RunningStats<T>> running_stats() const { return stats_; }

  std::uint64_t count_parameters() const;

  /// Class probabilities [B, num_classes]. In train mode BN uses and updates
  /// batch statistics; dropout draws from `rng`.
  Tensor<T> forward(const Tensor<T>& x, RandomSource* rng = nullptr);

  /// Train-mode forward plus backward of the mean cross-entropy. Parameter
  /// gradients are overwritten (not accumulated across calls).
  StepResult<T> forward_backward(const Tensor<T>& x, std::span<const int> labels, RandomSource& rng);

  void zero_grad();

  /// Frobenius norms of each weight layer's weight gradient, in layer order.
  std::vector<double> weight_gradient_norms() const;

  /// FNV-1a over every parameter value and running statistic.
  std::uint64_t state_hash() const;

  std::vector<ShapeTraceRow> shape_trace(std::size_t input_time) const {
    return wavecnn::shape_trace(spec_, input_time);
  }

  /// Index of the first convolution's kernel parameter.
  const Parameter<T>& first_conv_kernel() const;

 private:
  struct ConvUnit {
    std::size_t kernel = 0;
    std::optional<std::size_t> bias;
    std::optional<std::size_t> gamma, beta, stats;
    std::size_t stride = 1;
  };
  struct PoolStep {};
  struct ResBlockStep {
    ConvUnit first, second;
    std::size_t out_channels = 0;
  };
  struct ConvStep {
    ConvUnit unit;
  };
  struct GapStep {};
  struct FcStep {
    std::size_t weight = 0;
    std::optional<std::size_t> bias;
    std::optional<std::size_t> gamma, beta, stats;
    bool flatten_input = false;
  };
  struct DenseStep {
    std::size_t weight = 0, bias = 0;
  };
  using Step = std::variant<ConvStep, PoolStep, ResBlockStep, GapStep, FcStep, DenseStep>;

  Var run(Tape<T>& tape, Var x, Mode mode, RandomSource* rng);
  Var run_conv(Tape<T>& tape, Var x, const ConvUnit& unit, Mode mode, bool apply_relu);
  Var param_var(Tape<T>& tape, std::size_t index, bool track_grad);

  ArchitectureSpec spec_;
  std::vector<Parameter<T>> params_;
  std::vector<RunningStats<T>> stats_;
  std::vector<Step> steps_;
  std::vector<std::size_t> weight_params_;  // one per weight layer
  BatchNormConfig bn_config_;
  Mode mode_ = Mode::infer;
};

using ModelGraph = BasicModelGraph<float>;
using ModelGraph64 = BasicModelGraph<double>;

}  // namespace wavecnn
