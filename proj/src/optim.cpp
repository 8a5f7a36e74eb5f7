// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "wavecnn/train.hpp"

namespace wavecnn {

template <typename T>
void apply_l2(std::span<Parameter<T>> params, double coeff, bool include_batchnorm) {
  if (coeff < 0.0) throw ConfigError("l2 coefficient must be >= 0");
  if (coeff == 0.0) return;
  for (Parameter<T>& p : params) {
    if (p.is_batchnorm() && !include_batchnorm) continue;
    if (p.grad.empty()) p.grad = Tensor<T>(p.value.shape());
    for (std::size_t i = 0; i < p.value.size(); ++i) p.grad[i] += static_cast<T>(2.0 * coeff * p.value[i]);
  }
}

template <typename T>
void adam_step(std::span<Parameter<T>> params, AdamState<T>& state) {
  if (state.m.empty()) {
    for (const Parameter<T>& p : params) {
      state.m.emplace_back(p.value.shape());
      state.v.emplace_back(p.value.shape());
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("optimizer holds " + std::to_string(state.m.size()) + " moment tensors for " +
                     std::to_string(params.size()) + " parameters");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Parameter<T>& p = params[k];
    if (!p.grad.empty()) require_same_shape(p.grad.shape(), p.value.shape(), "adam gradient for " + p.name);
    require_same_shape(state.m[k].shape(), p.value.shape(), "adam moments for " + p.name);
  }

  const AdamConfig& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter<T>& p = params[k];
    Tensor<T>& m = state.m[k];
    Tensor<T>& v = state.v[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad.empty() ? 0.0 : static_cast<double>(p.grad[i]);
      const double mi = c.beta1 * static_cast<double>(m[i]) + (1.0 - c.beta1) * g;
      const double vi = c.beta2 * static_cast<double>(v[i]) + (1.0 - c.beta2) * g * g;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double update = c.alpha * (mi / correction1) / (std::sqrt(vi / correction2) + c.epsilon);
      p.value[i] = static_cast<T>(static_cast<double>(p.value[i]) - update);
    }
  }
}

template void apply_l2(std::span<Parameter<float>>, double, bool);
template void apply_l2(std::span<Parameter<double>>, double, bool);
template void adam_step(std::span<Parameter<float>>, AdamState<float>&);
template void adam_step(std::span<Parameter<double>>, AdamState<double>&);

}  // namespace wavecnn
