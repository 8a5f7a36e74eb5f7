// SPDX-License-Identifier: Apache-2.0

#include "wavecnn/tensor.hpp"

#include <cmath>
#include <sstream>

#ifndef WAVECNN_CHECK_FINITE
#define WAVECNN_CHECK_FINITE 1
#endif

namespace wavecnn {

namespace {

void validate_dims(const std::vector<std::size_t>& dims) {
  if (dims.empty()) throw ShapeError("shape must have rank >= 1");
  for (std::size_t d : dims) {
    if (d == 0) {
      std::ostringstream os;
      os << "shape extent must be >= 1, got [";
      for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "," : "") << dims[i];
      os << "]";
      throw ShapeError(os.str());
    }
  }
}

}  // namespace

Shape::Shape(std::initializer_list<std::size_t> dims) : dims_(dims) { validate_dims(dims_); }

Shape::Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) { validate_dims(dims_); }

std::size_t Shape::element_count() const {
  if (dims_.empty()) return 0;
  std::size_t n = 1;
  for (std::size_t d : dims_) n *= d;
  return n;
}

std::string Shape::to_string() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < dims_.size(); ++i) os << (i ? "," : "") << dims_[i];
  os << "]";
  return os.str();
}

void require_same_shape(const Shape& a, const Shape& b, std::string_view what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.to_string() + " vs " + b.to_string());
  }
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(std::move(shape)), data_(shape_.element_count(), fill) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_.element_count()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_.to_string());
  }
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const& {
  Tensor copy = *this;
  return std::move(copy).reshaped(std::move(shape));
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape shape) && {
  if (shape.element_count() != data_.size()) {
    throw ShapeError("cannot reshape " + shape_.to_string() + " to " + shape.to_string());
  }
  shape_ = std::move(shape);
  return std::move(*this);
}

template <typename T>
void Tensor<T>::fill(T value) {
  for (T& v : data_) v = value;
}

template <typename T>
Tensor<T>& Tensor<T>::operator+=(const Tensor& other) {
  require_same_shape(shape_, other.shape_, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

template <typename T>
Tensor<T> elementwise(ElementwiseOp op, const Tensor<T>& a, const Tensor<T>& b) {
  if (op == ElementwiseOp::max_with_zero) return elementwise(op, a, T{0});
  require_same_shape(a.shape(), b.shape(), "elementwise");
  Tensor<T> out(a.shape());
  const std::size_t n = a.size();
  switch (op) {
    case ElementwiseOp::add:
      for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
      break;
    case ElementwiseOp::sub:
      for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
      break;
    case ElementwiseOp::mul:
    case ElementwiseOp::scale:
      for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
      break;
    case ElementwiseOp::max_with_zero:
      break;
  }
  check_finite(out, "elementwise");
  return out;
}

template <typename T>
Tensor<T> elementwise(ElementwiseOp op, const Tensor<T>& a, T b) {
  Tensor<T> out(a.shape());
  const std::size_t n = a.size();
  switch (op) {
    case ElementwiseOp::add:
      for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b;
      break;
    case ElementwiseOp::sub:
      for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b;
      break;
    case ElementwiseOp::mul:
    case ElementwiseOp::scale:
      for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b;
      break;
    case ElementwiseOp::max_with_zero:
      for (std::size_t i = 0; i < n; ++i) out[i] = a[i] > T{0} ? a[i] : T{0};
      break;
  }
  check_finite(out, "elementwise");
  return out;
}

namespace {

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(const Shape& s, std::size_t axis) {
  if (axis >= s.rank()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + s.to_string());
  }
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.extent = s[axis];
  for (std::size_t i = axis + 1; i < s.rank(); ++i) r.inner *= s[i];
  return r;
}

Shape collapse_axis(const Shape& s, std::size_t axis) {
  std::vector<std::size_t> dims = s.dims();
  dims[axis] = 1;
  return Shape(std::move(dims));
}

}  // namespace

template <typename T>
Tensor<T> reduce(ReduceOp op, const Tensor<T>& t, std::size_t axis) {
  const AxisSplit ax = split_axis(t.shape(), axis);
  Tensor<T> out(collapse_axis(t.shape(), axis));
  for (std::size_t o = 0; o < ax.outer; ++o) {
    for (std::size_t k = 0; k < ax.extent; ++k) {
      const T* row = t.raw() + (o * ax.extent + k) * ax.inner;
      T* dst = out.raw() + o * ax.inner;
      for (std::size_t i = 0; i < ax.inner; ++i) dst[i] += row[i];
    }
  }
  if (op == ReduceOp::mean) {
    const T denom = static_cast<T>(ax.extent);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] /= denom;
  }
  check_finite(out, "reduce");
  return out;
}

template <typename T>
ArgMaxResult<T> max_with_argmax(const Tensor<T>& t, std::size_t axis) {
  const AxisSplit ax = split_axis(t.shape(), axis);
  ArgMaxResult<T> r{Tensor<T>(collapse_axis(t.shape(), axis)), std::vector<std::size_t>(ax.outer * ax.inner, 0)};
  for (std::size_t o = 0; o < ax.outer; ++o) {
    for (std::size_t i = 0; i < ax.inner; ++i) {
      const T* base = t.raw() + o * ax.extent * ax.inner + i;
      T best = base[0];
      std::size_t best_k = 0;
      for (std::size_t k = 1; k < ax.extent; ++k) {
        if (base[k * ax.inner] > best) {
          best = base[k * ax.inner];
          best_k = k;
        }
      }
      r.values[o * ax.inner + i] = best;
      r.indices[o * ax.inner + i] = best_k;
    }
  }
  return r;
}

template <typename T>
void check_finite(std::span<const T> values, std::string_view where) {
#if WAVECNN_CHECK_FINITE
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NonFiniteError("non-finite value " + std::to_string(static_cast<double>(values[i])) + " at element " +
                           std::to_string(i) + " in " + std::string(where));
    }
  }
#else
  (void)values;
  (void)where;
#endif
}

std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (std::byte b : bytes) {
    h ^= static_cast<std::uint64_t>(b);
    h *= 1099511628211ULL;
  }
  return h;
}

#define WAVECNN_INSTANTIATE(T)                                                          \
  template class Tensor<T>;                                                             \
  template Tensor<T> elementwise(ElementwiseOp, const Tensor<T>&, const Tensor<T>&);    \
  template Tensor<T> elementwise(ElementwiseOp, const Tensor<T>&, T);                   \
  template Tensor<T> reduce(ReduceOp, const Tensor<T>&, std::size_t);                   \
  template ArgMaxResult<T> max_with_argmax(const Tensor<T>&, std::size_t);              \
  template void check_finite(std::span<const T>, std::string_view);

WAVECNN_INSTANTIATE(float)
WAVECNN_INSTANTIATE(double)

#undef WAVECNN_INSTANTIATE

}  // namespace wavecnn
