// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major tensors. Activations use the layout [batch, time, channels]
// and convolution kernels use [receptive_field, in_channels, out_channels].

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wavecnn/error.hpp"

namespace wavecnn {

class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims);
  explicit Shape(std::vector<std::size_t> dims);

  std::size_t rank() const { return dims_.size(); }
  std::size_t operator[](std::size_t axis) const { return dims_[axis]; }
  const std::vector<std::size_t>& dims() const { return dims_; }

  /// Product of extents; 0 for the empty (rank-0) shape.
  std::size_t element_count() const;

  std::string to_string() const;

  friend bool operator==(const Shape&, const Shape&) = default;

 private:
  std::vector<std::size_t> dims_;
};

/// Owning dense tensor. A default-constructed tensor is "absent" (rank 0,
/// no data); every constructed tensor has at least one element.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{0});
  Tensor(Shape shape, std::vector<T> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::size_t dim(std::size_t axis) const { return shape_[axis]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  T* raw() { return data_.data(); }
  const T* raw() const { return data_.data(); }
  const std::vector<T>& values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // [B, T, C] accessor.
  T& at(std::size_t b, std::size_t t, std::size_t c) {
    return data_[(b * shape_[1] + t) * shape_[2] + c];
  }
  const T& at(std::size_t b, std::size_t t, std::size_t c) const {
    return data_[(b * shape_[1] + t) * shape_[2] + c];
  }

  /// Same data, new shape; element counts must agree.
  Tensor reshaped(Shape shape) const&;
  Tensor reshaped(Shape shape) &&;

  void fill(T value);
  Tensor& operator+=(const Tensor& other);

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

enum class ElementwiseOp { add, sub, mul, scale, max_with_zero };
enum class ReduceOp { sum, mean };

/// Binary elementwise op over equal shapes. `max_with_zero` ignores `b`.
template <typename T>
Tensor<T> elementwise(ElementwiseOp op, const Tensor<T>& a, const Tensor<T>& b);

/// Tensor-with-scalar form.
template <typename T>
Tensor<T> elementwise(ElementwiseOp op, const Tensor<T>& a, T b);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return elementwise(ElementwiseOp::add, a, b);
}
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return elementwise(ElementwiseOp::sub, a, b);
}
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return elementwise(ElementwiseOp::mul, a, b);
}
template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  return elementwise(ElementwiseOp::scale, a, s);
}
template <typename T>
Tensor<T> max_with_zero(const Tensor<T>& a) {
  return elementwise(ElementwiseOp::max_with_zero, a, T{0});
}

/// Reduces `axis` to extent 1 (rank is preserved).
template <typename T>
Tensor<T> reduce(ReduceOp op, const Tensor<T>& t, std::size_t axis);

template <typename T>
struct ArgMaxResult {
  Tensor<T> values;
  std::vector<std::size_t> indices;  // position along the reduced axis
};

/// Maximum along `axis`; ties resolve to the first index.
template <typename T>
ArgMaxResult<T> max_with_argmax(const Tensor<T>& t, std::size_t axis);

/// Throws NonFiniteError naming `where` if any element is NaN or infinite.
/// Compiled out when WAVECNN_CHECK_FINITE is 0.
template <typename T>
void check_finite(std::span<const T> values, std::string_view where);

template <typename T>
void check_finite(const Tensor<T>& t, std::string_view where) {
  check_finite(t.data(), where);
}

void require_same_shape(const Shape& a, const Shape& b, std::string_view what);

/// FNV-1a over raw bytes; used for content keys and state fingerprints.
std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t seed = 1469598103934665603ULL);

template <typename T>
std::uint64_t fnv1a(const Tensor<T>& t, std::uint64_t seed = 1469598103934665603ULL) {
  return fnv1a(std::as_bytes(t.data()), seed);
}

}  // namespace wavecnn
