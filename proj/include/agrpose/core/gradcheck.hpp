#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "agrpose/core/net.hpp"

namespace agrpose {

struct GradCheckOptions {
  double eps = 1e-5;
  std::uint64_t seed = 7;
  bool check_input = true;
  // Harness self-test: analytic gradients are scaled by (1 + corrupt) before
  // comparison, so a correct implementation must then fail.
  double corrupt = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst;  // "param[index]" with the largest error
  std::size_t checked = 0;
};

/// |analytic - numeric| / max(1, |analytic|), maximised over entries.
double relative_error(double analytic, double numeric);

/// Compares `analytic` against central differences of `f` around `x`.
GradCheckReport check_gradient(const std::function<double(std::span<const double>)>& f, std::vector<double> x,
                               std::span<const double> analytic, double eps, const std::string& label = "x");

/// Finite-difference check of every network parameter (and optionally the
/// input) for the scalar loss sum(output * R), R uniform in [-1,1] from `seed`.
GradCheckReport grad_check_report(const Network<double>& net, const ParamSet<double>& params, const TensorD& input,
                                  const GradCheckOptions& opt);

inline double grad_check(const Network<double>& net, const ParamSet<double>& params, const TensorD& input,
                         double eps) {
  GradCheckOptions opt;
  opt.eps = eps;
  return grad_check_report(net, params, input, opt).max_rel_error;
}

}  // namespace agrpose
