#include "agrpose/core/adam.hpp"

#include <cmath>

namespace agrpose {

template <class T>
void adam_step(ParamSet<T>& params, const AdamOptions& opt) {
  for (const auto& p : params.params())
    if (!p.grad.all_finite()) throw numerical_error("non-finite gradient in parameter '" + p.name + "'");

  params.advance_step();
  const double t = double(params.step());
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  for (auto& p : params.params()) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      const double m = opt.beta1 * double(p.m[i]) + (1.0 - opt.beta1) * g;
      const double v = opt.beta2 * double(p.v[i]) + (1.0 - opt.beta2) * g * g;
      p.m[i] = T(m);
      p.v[i] = T(v);
      const double update = opt.lr * (m / c1) / (std::sqrt(v / c2) + opt.eps);
      p.value[i] = T(double(p.value[i]) - update);
    }
  }
}

template void adam_step<float>(ParamSet<float>&, const AdamOptions&);
template void adam_step<double>(ParamSet<double>&, const AdamOptions&);

}  // namespace agrpose
