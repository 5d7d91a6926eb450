#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "sspb/error.hpp"

namespace sspb {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);

// Product of extents; rejects empty shapes and zero extents.
std::size_t checked_numel(const Shape& s);

// Dense row-major N-d array. Values are expected to stay finite; callers that
// can produce NaN/Inf check explicitly and raise NumericError rather than
// letting bad values propagate silently.
template <typename T>
struct TensorT {
  Shape shape;
  std::vector<T> data;

  TensorT() = default;
  explicit TensorT(Shape s) : shape(std::move(s)), data(checked_numel(shape), T(0)) {}
  TensorT(Shape s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    if (checked_numel(shape) != data.size())
      throw ShapeError("tensor data length " + std::to_string(data.size()) +
                       " does not match shape " + shape_str(shape));
  }

  static TensorT full(Shape s, T v) {
    TensorT t(std::move(s));
    for (T& x : t.data) x = v;
    return t;
  }
  static TensorT scalar(T v) { return TensorT({1}, {v}); }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  bool same_shape(const TensorT& o) const { return shape == o.shape; }

  T& at(std::size_t i) { return data[i]; }
  T at(std::size_t i) const { return data[i]; }

  // (row, col, channel) for rank-3 tensors
  T& at(std::size_t i, std::size_t j, std::size_t k) {
    return data[(i * shape[1] + j) * shape[2] + k];
  }
  T at(std::size_t i, std::size_t j, std::size_t k) const {
    return data[(i * shape[1] + j) * shape[2] + k];
  }

  // (kh, kw, cin, cout) for rank-4 tensors
  T& at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    return data[((i * shape[1] + j) * shape[2] + k) * shape[3] + l];
  }
  T at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return data[((i * shape[1] + j) * shape[2] + k) * shape[3] + l];
  }

  bool all_finite() const {
    for (T v : data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

}  // namespace sspb
