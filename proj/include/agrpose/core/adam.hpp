#pragma once

#include "agrpose/core/params.hpp"

namespace agrpose {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update over every parameter in the set. If any
/// gradient is non-finite nothing is modified and a numerical error naming the
/// parameter is thrown.
template <class T>
void adam_step(ParamSet<T>& params, const AdamOptions& opt);

extern template void adam_step<float>(ParamSet<float>&, const AdamOptions&);
extern template void adam_step<double>(ParamSet<double>&, const AdamOptions&);

}  // namespace agrpose
