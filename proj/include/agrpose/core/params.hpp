#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agrpose/core/tensor.hpp"

namespace agrpose {

/// A trainable tensor with its gradient and Adam moments (all the same shape).
template <class T>
struct Parameter {
  std::string name;
  std::string layer;  // owning layer, e.g. "L0:conv3d"
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> m;
  Tensor<T> v;

  Parameter(std::string name_, std::string layer_, Tensor<T> value_)
      : name(std::move(name_)),
        layer(std::move(layer_)),
        value(std::move(value_)),
        grad(value.dims()),
        m(value.dims()),
        v(value.dims()) {}
};

template <class T>
class ParamSet {
 public:
  std::vector<Parameter<T>>& params() { return params_; }
  const std::vector<Parameter<T>>& params() const { return params_; }

  Parameter<T>& add(std::string name, std::string layer, Tensor<T> value) {
    if (find(name)) throw data_error("duplicate parameter '" + name + "'");
    return params_.emplace_back(std::move(name), std::move(layer), std::move(value));
  }

  Parameter<T>* find(const std::string& name) {
    for (auto& p : params_)
      if (p.name == name) return &p;
    return nullptr;
  }
  const Parameter<T>* find(const std::string& name) const {
    for (const auto& p : params_)
      if (p.name == name) return &p;
    return nullptr;
  }
  Parameter<T>& at(const std::string& name) {
    if (auto* p = find(name)) return *p;
    throw data_error("missing parameter '" + name + "'");
  }
  const Parameter<T>& at(const std::string& name) const {
    if (const auto* p = find(name)) return *p;
    throw data_error("missing parameter '" + name + "'");
  }

  void zero_grad() {
    for (auto& p : params_) p.grad.fill(T(0));
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  std::uint64_t step() const { return step_; }
  void set_step(std::uint64_t s) { step_ = s; }
  void advance_step() { ++step_; }

 private:
  std::vector<Parameter<T>> params_;
  std::uint64_t step_ = 0;
};

/// Converts values and optimizer state to another precision.
template <class U, class T>
ParamSet<U> params_cast(const ParamSet<T>& src) {
  ParamSet<U> out;
  for (const auto& p : src.params()) {
    auto& q = out.add(p.name, p.layer, tensor_cast<U>(p.value));
    q.grad = tensor_cast<U>(p.grad);
    q.m = tensor_cast<U>(p.m);
    q.v = tensor_cast<U>(p.v);
  }
  out.set_step(src.step());
  return out;
}

}  // namespace agrpose
