#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstring>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "agrpose/core/error.hpp"

namespace agrpose {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& dims);

/// Dense row-major tensor. The last dimension is contiguous.
template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape dims, T fill = T(0)) : dims_(std::move(dims)), data_(shape_size(dims_), fill) {
    for (auto d : dims_)
      if (d == 0) throw data_error("tensor dims must be positive, got " + shape_string(dims_));
  }
  Tensor(Shape dims, std::vector<T> data) : dims_(std::move(dims)), data_(std::move(data)) {
    if (shape_size(dims_) != data_.size())
      throw data_error("tensor payload size " + std::to_string(data_.size()) +
                       " does not match dims " + shape_string(dims_));
  }

  const Shape& dims() const { return dims_; }
  std::size_t dim(std::size_t i) const { return dims_.at(i); }
  std::size_t rank() const { return dims_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // 3-axis and 4-axis accessors for [C,H,W] maps and [C,Z,Y,X] volumes.
  T& at(std::size_t a, std::size_t b, std::size_t c) { return data_[(a * dims_[1] + b) * dims_[2] + c]; }
  const T& at(std::size_t a, std::size_t b, std::size_t c) const {
    return data_[(a * dims_[1] + b) * dims_[2] + c];
  }
  T& at(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
    return data_[((a * dims_[1] + b) * dims_[2] + c) * dims_[3] + d];
  }
  const T& at(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
    return data_[((a * dims_[1] + b) * dims_[2] + c) * dims_[3] + d];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  void reshape(Shape dims) {
    if (shape_size(dims) != data_.size())
      throw data_error("cannot reshape " + shape_string(dims_) + " to " + shape_string(dims));
    dims_ = std::move(dims);
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  friend bool operator==(const Tensor& a, const Tensor& b) { return a.dims_ == b.dims_ && a.data_ == b.data_; }

 private:
  Shape dims_;
  std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

template <class U, class T>
Tensor<U> tensor_cast(const Tensor<T>& t) {
  std::vector<U> out(t.size());
  std::transform(t.vec().begin(), t.vec().end(), out.begin(), [](T v) { return static_cast<U>(v); });
  return Tensor<U>(t.dims(), std::move(out));
}

/// Bitwise equality including shape; NaN payloads compare by bits.
template <class T>
bool bitwise_equal(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.dims() != b.dims()) return false;
  return std::equal(a.vec().begin(), a.vec().end(), b.vec().begin(), [](T x, T y) {
    return std::memcmp(&x, &y, sizeof(T)) == 0;
  });
}

}  // namespace agrpose
