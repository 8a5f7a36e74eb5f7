// SPDX-License-Identifier: Apache-2.0

#include "wavecnn/model_zoo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace wavecnn {

namespace {

struct BaseModel {
  std::string_view name;
  std::size_t depth;  // weight layers in the name
  std::size_t first_filters;
  std::vector<std::pair<std::size_t, std::size_t>> stages;  // (filters, convs or blocks)
  bool residual;
  bool trailing_pool;
};

const std::vector<BaseModel>& base_models() {
  static const std::vector<BaseModel> bases = {
      {"m3", 3, 256, {{256, 1}}, false, true},
      {"m5", 5, 128, {{128, 1}, {256, 1}, {512, 1}}, false, true},
      {"m11", 11, 64, {{64, 2}, {128, 2}, {256, 3}, {512, 2}}, false, false},
      {"m18", 18, 64, {{64, 4}, {128, 4}, {256, 4}, {512, 4}}, false, false},
      {"m34-res", 34, 48, {{48, 3}, {96, 4}, {192, 6}, {384, 3}}, true, false},
      {"m34", 34, 48, {{48, 6}, {96, 8}, {192, 12}, {384, 6}}, false, false},
  };
  return bases;
}

std::size_t scaled(std::size_t filters, double multiplier, std::size_t divisor) {
  const auto widened = static_cast<std::size_t>(std::llround(static_cast<double>(filters) * multiplier));
  return std::max<std::size_t>(1, widened / divisor);
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

}  // namespace

std::size_t ArchitectureSpec::conv_count() const {
  std::size_t n = 0;
  for (const LayerSpec& l : layers) {
    if (l.kind == LayerKind::conv) n += l.repeat;
    if (l.kind == LayerKind::resblock_group) n += 2 * l.repeat;
  }
  return n;
}

std::size_t ArchitectureSpec::weight_layer_count() const {
  std::size_t n = conv_count();
  for (const LayerSpec& l : layers) {
    if (l.kind == LayerKind::fc_block) n += l.repeat;
    if (l.kind == LayerKind::dense_softmax) n += 1;
  }
  return n;
}

bool ArchitectureSpec::has_batchnorm() const {
  return std::any_of(layers.begin(), layers.end(), [](const LayerSpec& l) { return l.with_bn; });
}

ArchitectureSpec architecture(std::string_view name, const BuildOptions& options) {
  const BaseModel* base = nullptr;
  for (const BaseModel& b : base_models()) {
    if (name.substr(0, b.name.size()) != b.name) continue;
    if (name.size() > b.name.size() && name[b.name.size()] != '-') continue;
    if (!base || b.name.size() > base->name.size()) base = &b;
  }
  if (!base) throw ConfigError("unknown architecture '" + std::string(name) + "'");

  bool fc = false, big = false, no_bn = false, stride1 = false;
  std::size_t first_rf = 80;
  std::string_view rest = name.substr(base->name.size());
  while (!rest.empty()) {
    auto take = [&](std::string_view token) {
      if (rest.substr(0, token.size()) == token &&
          (rest.size() == token.size() || rest[token.size()] == '-')) {
        rest.remove_prefix(token.size());
        return true;
      }
      return false;
    };
    if (take("-no-bn")) {
      no_bn = true;
    } else if (take("-fc")) {
      fc = true;
    } else if (take("-big")) {
      big = true;
    } else if (take("-srf")) {
      first_rf = 8;
    } else if (take("-lrf")) {
      first_rf = 320;
    } else if (take("-stride1")) {
      stride1 = true;
    } else {
      throw ConfigError("unknown architecture suffix '" + std::string(rest) + "' in '" + std::string(name) + "'");
    }
  }

  if (base->name == "m34" && !no_bn) {
    throw ConfigError("the plain 34-layer stack exists only as m34-no-bn; use m34-res");
  }

  double multiplier = 1.0;
  if (big) {
    if (base->name == "m3") {
      multiplier = 1.5;
    } else if (base->name == "m5") {
      multiplier = 2.0;
    } else {
      throw ConfigError("-big is defined only for m3 and m5");
    }
  }
  if (options.width_divisor < 1) throw ConfigError("width divisor must be >= 1");
  if (options.num_classes < 2) throw ConfigError("need at least two classes");

  ArchitectureSpec spec;
  spec.name = std::string(name);
  spec.num_classes = options.num_classes;
  spec.width_divisor = options.width_divisor;
  spec.input_time = options.input_time;
  spec.declared_weight_layers = base->depth + (fc ? 2 : 0);

  const bool bn = !no_bn;
  const std::size_t div = options.width_divisor;
  spec.layers.push_back(
      {LayerKind::conv, first_rf, stride1 ? 1u : 4u, scaled(base->first_filters, multiplier, div), 1, bn});
  for (const auto& [filters, count] : base->stages) {
    spec.layers.push_back({LayerKind::maxpool4, 0, 4, 0, 1, false});
    if (base->residual) {
      spec.layers.push_back({LayerKind::resblock_group, 3, 1, scaled(filters, multiplier, div), count, bn});
    } else {
      spec.layers.push_back({LayerKind::conv, 3, 1, scaled(filters, multiplier, div), count, bn});
    }
  }
  if (base->trailing_pool) spec.layers.push_back({LayerKind::maxpool4, 0, 4, 0, 1, false});
  if (fc) {
    spec.layers.push_back({LayerKind::fc_block, 0, 1, kFcWidth, 2, bn});
  } else {
    spec.layers.push_back({LayerKind::global_avg_pool, 0, 1, 0, 1, false});
  }
  spec.layers.push_back({LayerKind::dense_softmax, 0, 1, options.num_classes, 1, false});
  return spec;
}

std::vector<std::string> published_architectures() {
  return {"m3",       "m5",       "m11",        "m18",        "m34-res",   "m3-fc",     "m5-fc",
          "m11-fc",   "m18-fc",   "m3-big",     "m5-big",     "m11-srf",   "m18-srf",   "m11-lrf",
          "m18-lrf",  "m11-no-bn", "m18-no-bn", "m34-no-bn",  "m34-res-no-bn", "m11-stride1"};
}

std::vector<ShapeTraceRow> shape_trace(const ArchitectureSpec& spec, std::size_t input_time) {
  std::vector<ShapeTraceRow> rows;
  std::size_t time = input_time;
  std::size_t channels = 1;
  std::size_t conv_index = 0, pool_index = 0;
  for (const LayerSpec& l : spec.layers) {
    std::ostringstream label;
    switch (l.kind) {
      case LayerKind::conv:
        if (time < 1) throw ShapeError("shape_trace: time collapsed to zero");
        time = ceil_div(time, l.stride);
        channels = l.out_channels;
        label << "conv" << conv_index << " [" << l.rf;
        if (l.stride != 1) label << "/" << l.stride;
        label << ", " << l.out_channels << "]";
        if (l.repeat > 1) label << " x " << l.repeat;
        conv_index += l.repeat;
        break;
      case LayerKind::resblock_group:
        channels = l.out_channels;
        label << "resgroup conv" << conv_index << " [3, " << l.out_channels << "; 3, " << l.out_channels << "] x "
              << l.repeat;
        conv_index += 2 * l.repeat;
        break;
      case LayerKind::maxpool4:
        time = ceil_div(time, kPoolWindow);
        label << "maxpool" << pool_index++ << " 4x1";
        break;
      case LayerKind::global_avg_pool:
        time = 1;
        label << "global_avg_pool";
        break;
      case LayerKind::fc_block:
        label << "fc [" << time * channels << " -> " << l.out_channels << "] x " << l.repeat;
        time = 1;
        channels = l.out_channels;
        break;
      case LayerKind::dense_softmax:
        label << "dense_softmax [" << channels << " -> " << l.out_channels << "]";
        time = 1;
        channels = l.out_channels;
        break;
    }
    rows.push_back({label.str(), Shape{1, time, channels}});
  }
  return rows;
}

std::vector<ParameterGroup> parameter_breakdown(const ArchitectureSpec& spec) {
  std::vector<ParameterGroup> groups;
  std::uint64_t time = spec.input_time;
  std::uint64_t channels = 1;
  std::size_t conv_index = 0, fc_index = 0;
  auto conv = [&](const LayerSpec& l) {
    const std::uint64_t n = static_cast<std::uint64_t>(l.rf) * channels * l.out_channels +
                            (l.with_bn ? 2 * l.out_channels : l.out_channels);
    groups.push_back({"conv" + std::to_string(conv_index++), n});
    channels = l.out_channels;
  };
  for (const LayerSpec& l : spec.layers) {
    switch (l.kind) {
      case LayerKind::conv:
        for (std::size_t i = 0; i < l.repeat; ++i) conv(l);
        time = ceil_div(time, l.stride);
        break;
      case LayerKind::resblock_group:
        for (std::size_t i = 0; i < 2 * l.repeat; ++i) conv(l);
        break;
      case LayerKind::maxpool4:
        time = ceil_div(time, kPoolWindow);
        break;
      case LayerKind::global_avg_pool:
        time = 1;
        break;
      case LayerKind::fc_block: {
        std::uint64_t in = time * channels;
        for (std::size_t i = 0; i < l.repeat; ++i) {
          groups.push_back({"fc" + std::to_string(fc_index++),
                            in * l.out_channels + (l.with_bn ? 2 * l.out_channels : l.out_channels)});
          in = l.out_channels;
        }
        time = 1;
        channels = l.out_channels;
        break;
      }
      case LayerKind::dense_softmax:
        groups.push_back({"dense", channels * l.out_channels + l.out_channels});
        break;
    }
  }
  return groups;
}

std::uint64_t count_parameters(const ArchitectureSpec& spec) {
  std::uint64_t total = 0;
  for (const ParameterGroup& g : parameter_breakdown(spec)) total += g.count;
  return total;
}

std::string rounded_millions(std::uint64_t count) {
  const double m = static_cast<double>(count) / 1e6;
  char buf[32];
  if (m >= 10.0) {
    std::snprintf(buf, sizeof buf, "%.0fM", m);
    return buf;
  }
  std::snprintf(buf, sizeof buf, "%.1f", m);
  std::string s = buf;
  if (s.size() > 2 && s.substr(s.size() - 2) == ".0") s.resize(s.size() - 2);
  return s + "M";
}

// ---------------------------------------------------------------------------

template <typename T>
BasicModelGraph<T> BasicModelGraph<T>::build(std::string_view name, const BuildOptions& options, RandomSource& rng) {
  return build(architecture(name, options), rng);
}

template <typename T>
BasicModelGraph<T> BasicModelGraph<T>::build(const ArchitectureSpec& spec, RandomSource& rng) {
  BasicModelGraph g;
  g.spec_ = spec;

  auto add_param = [&](std::string name, ParamKind kind, Tensor<T> value) {
    g.params_.push_back(Parameter<T>{std::move(name), kind, std::move(value), Tensor<T>()});
    return g.params_.size() - 1;
  };
  auto glorot = [&](Shape shape, double fan_in, double fan_out) {
    Tensor<T> w(std::move(shape));
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<T>(rng.uniform(-limit, limit));
    return w;
  };

  std::size_t conv_index = 0, fc_index = 0;
  std::size_t channels = 1;
  std::size_t time = spec.input_time;

  auto make_conv = [&](std::size_t rf, std::size_t stride, std::size_t in, std::size_t out, bool bn) {
    ConvUnit u;
    const std::string prefix = "conv" + std::to_string(conv_index++);
    u.stride = stride;
    u.kernel = add_param(prefix + ".kernel", ParamKind::conv_kernel,
                         glorot(Shape{rf, in, out}, static_cast<double>(rf * in), static_cast<double>(rf * out)));
    g.weight_params_.push_back(u.kernel);
    if (bn) {
      u.gamma = add_param(prefix + ".bn.gamma", ParamKind::bn_gamma, Tensor<T>(Shape{out}, T{1}));
      u.beta = add_param(prefix + ".bn.beta", ParamKind::bn_beta, Tensor<T>(Shape{out}, T{0}));
      g.stats_.push_back({prefix + ".bn", BatchNormStats<T>::identity(out)});
      u.stats = g.stats_.size() - 1;
    } else {
      u.bias = add_param(prefix + ".bias", ParamKind::bias, Tensor<T>(Shape{out}, T{0}));
    }
    return u;
  };

  for (const LayerSpec& l : spec.layers) {
    switch (l.kind) {
      case LayerKind::conv:
        for (std::size_t i = 0; i < l.repeat; ++i) {
          g.steps_.push_back(ConvStep{make_conv(l.rf, l.stride, channels, l.out_channels, l.with_bn)});
          channels = l.out_channels;
          time = ceil_div(time, l.stride);
        }
        break;
      case LayerKind::resblock_group:
        for (std::size_t i = 0; i < l.repeat; ++i) {
          ResBlockStep block;
          block.first = make_conv(l.rf, 1, channels, l.out_channels, l.with_bn);
          block.second = make_conv(l.rf, 1, l.out_channels, l.out_channels, l.with_bn);
          block.out_channels = l.out_channels;
          g.steps_.push_back(block);
          channels = l.out_channels;
        }
        break;
      case LayerKind::maxpool4:
        g.steps_.push_back(PoolStep{});
        time = ceil_div(time, kPoolWindow);
        break;
      case LayerKind::global_avg_pool:
        g.steps_.push_back(GapStep{});
        time = 1;
        break;
      case LayerKind::fc_block: {
        std::size_t in = time * channels;
        for (std::size_t i = 0; i < l.repeat; ++i) {
          FcStep fc;
          const std::string prefix = "fc" + std::to_string(fc_index++);
          fc.flatten_input = (i == 0);
          fc.weight = add_param(prefix + ".w", ParamKind::fc_weight,
                                glorot(Shape{in, l.out_channels}, static_cast<double>(in),
                                       static_cast<double>(l.out_channels)));
          g.weight_params_.push_back(fc.weight);
          if (l.with_bn) {
            fc.gamma = add_param(prefix + ".bn.gamma", ParamKind::bn_gamma, Tensor<T>(Shape{l.out_channels}, T{1}));
            fc.beta = add_param(prefix + ".bn.beta", ParamKind::bn_beta, Tensor<T>(Shape{l.out_channels}, T{0}));
            g.stats_.push_back({prefix + ".bn", BatchNormStats<T>::identity(l.out_channels)});
            fc.stats = g.stats_.size() - 1;
          } else {
            fc.bias = add_param(prefix + ".b", ParamKind::bias, Tensor<T>(Shape{l.out_channels}, T{0}));
          }
          g.steps_.push_back(fc);
          in = l.out_channels;
        }
        time = 1;
        channels = l.out_channels;
        break;
      }
      case LayerKind::dense_softmax: {
        DenseStep d;
        d.weight = add_param("dense.w", ParamKind::dense_weight,
                             glorot(Shape{channels, l.out_channels}, static_cast<double>(channels),
                                    static_cast<double>(l.out_channels)));
        d.bias = add_param("dense.b", ParamKind::bias, Tensor<T>(Shape{l.out_channels}, T{0}));
        g.weight_params_.push_back(d.weight);
        g.steps_.push_back(d);
        break;
      }
    }
  }
  return g;
}

template <typename T>
Parameter<T>* BasicModelGraph<T>::find_parameter(std::string_view name) {
  for (Parameter<T>& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

template <typename T>
const Parameter<T>* BasicModelGraph<T>::find_parameter(std::string_view name) const {
  for (const Parameter<T>& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

template <typename T>
std::uint64_t BasicModelGraph<T>::count_parameters() const {
  std::uint64_t n = 0;
  for (const Parameter<T>& p : params_) n += p.value.size();
  return n;
}

template <typename T>
const Parameter<T>& BasicModelGraph<T>::first_conv_kernel() const {
  return params_.at(weight_params_.at(0));
}

template <typename T>
Var BasicModelGraph<T>::param_var(Tape<T>& tape, std::size_t index, bool track_grad) {
  Parameter<T>& p = params_[index];
  return tape.parameter(p.value, track_grad ? &p.grad : nullptr);
}

template <typename T>
Var BasicModelGraph<T>::run_conv(Tape<T>& tape, Var x, const ConvUnit& unit, Mode mode, bool apply_relu) {
  const bool track = mode == Mode::train;
  std::optional<Var> bias;
  if (unit.bias) bias = param_var(tape, *unit.bias, track);
  Var h = ag::conv1d(tape, x, param_var(tape, unit.kernel, track), bias, unit.stride);
  if (unit.stats) {
    h = ag::batchnorm(tape, h, param_var(tape, *unit.gamma, track), param_var(tape, *unit.beta, track),
                      stats_[*unit.stats].stats, bn_config_, mode);
  }
  return apply_relu ? ag::relu(tape, h) : h;
}

template <typename T>
Var BasicModelGraph<T>::run(Tape<T>& tape, Var x, Mode mode, RandomSource* rng) {
  const Shape in_shape = tape.value(x).shape();
  if (in_shape.rank() != 3 || in_shape[2] != 1) {
    throw ShapeError("model input must be [batch, time, 1], got " + in_shape.to_string());
  }
  const std::size_t batch = in_shape[0];
  const std::size_t min_time = spec_.layers.front().rf;
  if (in_shape[1] < min_time) {
    throw ShapeError("input length " + std::to_string(in_shape[1]) + " is shorter than the first receptive field " +
                     std::to_string(min_time));
  }
  if (mode == Mode::train && batch < 2 && spec_.has_batchnorm()) {
    throw ConfigError("train-mode forward with batch normalization needs batch size >= 2");
  }
  const bool track = mode == Mode::train;

  Var h = x;
  for (const Step& step : steps_) {
    if (const auto* c = std::get_if<ConvStep>(&step)) {
      h = run_conv(tape, h, c->unit, mode, true);
    } else if (std::holds_alternative<PoolStep>(step)) {
      h = ag::maxpool(tape, h);
    } else if (const auto* r = std::get_if<ResBlockStep>(&step)) {
      const Var shortcut = ag::pad_channels(tape, h, r->out_channels);
      Var branch = run_conv(tape, h, r->first, mode, true);
      branch = run_conv(tape, branch, r->second, mode, false);
      h = ag::relu(tape, ag::add(tape, branch, shortcut));
    } else if (std::holds_alternative<GapStep>(step)) {
      h = ag::global_avg_pool(tape, h);
    } else if (const auto* f = std::get_if<FcStep>(&step)) {
      const Shape s = tape.value(h).shape();
      if (f->flatten_input && s[1] * s[2] != params_[f->weight].value.dim(0)) {
        throw ShapeError("fc head was built for input length " + std::to_string(spec_.input_time) +
                         "; fc variants require exactly that length");
      }
      Var flat = ag::reshape(tape, h, Shape{s[0], s[1] * s[2]});
      std::optional<Var> bias;
      if (f->bias) bias = param_var(tape, *f->bias, track);
      Var z = ag::linear(tape, flat, param_var(tape, f->weight, track), bias);
      const std::size_t width = tape.value(z).dim(1);
      z = ag::reshape(tape, z, Shape{s[0], 1, width});
      if (f->stats) {
        z = ag::batchnorm(tape, z, param_var(tape, *f->gamma, track), param_var(tape, *f->beta, track),
                          stats_[*f->stats].stats, bn_config_, mode);
      }
      z = ag::relu(tape, z);
      if (rng) {
        z = ag::dropout(tape, z, kFcDropout, mode, *rng);
      } else if (mode == Mode::train) {
        throw ConfigError("train-mode forward with dropout needs a RandomSource");
      }
      h = z;
    } else if (const auto* d = std::get_if<DenseStep>(&step)) {
      const Shape s = tape.value(h).shape();
      Var flat = ag::reshape(tape, h, Shape{s[0], s[1] * s[2]});
      h = ag::linear(tape, flat, param_var(tape, d->weight, track), param_var(tape, d->bias, track));
    }
  }
  return h;
}

template <typename T>
Tensor<T> BasicModelGraph<T>::forward(const Tensor<T>& x, RandomSource* rng) {
  Tape<T> tape;
  const Var logits = run(tape, tape.input(x), mode_, rng);
  const Tensor<T>& z = tape.value(logits);
  std::vector<int> dummy(z.dim(0), 0);
  return softmax_xent_forward(z, dummy).probabilities;
}

template <typename T>
StepResult<T> BasicModelGraph<T>::forward_backward(const Tensor<T>& x, std::span<const int> labels,
                                                   RandomSource& rng) {
  zero_grad();
  Tape<T> tape;
  const Var logits = run(tape, tape.input(x), Mode::train, &rng);
  ag::LossVars<T> loss = ag::softmax_xent(tape, logits, labels);
  StepResult<T> r{static_cast<double>(tape.value(loss.loss)[0]), std::move(loss.probabilities)};
  tape.backward(loss.loss, Tensor<T>(Shape{1}, T{1}));
  for (Parameter<T>& p : params_) {
    if (p.grad.empty()) p.grad = Tensor<T>(p.value.shape());
  }
  return r;
}

template <typename T>
void BasicModelGraph<T>::zero_grad() {
  for (Parameter<T>& p : params_) p.grad = Tensor<T>();
}

template <typename T>
std::vector<double> BasicModelGraph<T>::weight_gradient_norms() const {
  std::vector<double> norms;
  norms.reserve(weight_params_.size());
  for (std::size_t idx : weight_params_) {
    double s = 0.0;
    for (T v : params_[idx].grad.data()) s += static_cast<double>(v) * v;
    norms.push_back(std::sqrt(s));
  }
  return norms;
}

template <typename T>
std::uint64_t BasicModelGraph<T>::state_hash() const {
  std::uint64_t h = fnv1a(std::as_bytes(std::span(spec_.name)));
  for (const Parameter<T>& p : params_) h = fnv1a(p.value, h);
  for (const RunningStats<T>& s : stats_) {
    h = fnv1a(s.stats.running_mean, h);
    h = fnv1a(s.stats.running_var, h);
  }
  return h;
}

template class BasicModelGraph<float>;
template class BasicModelGraph<double>;

}  // namespace wavecnn
