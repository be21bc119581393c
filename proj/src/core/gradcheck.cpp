#include "agrpose/core/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "agrpose/core/random.hpp"

namespace agrpose {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
}

GradCheckReport check_gradient(const std::function<double(std::span<const double>)>& f, std::vector<double> x,
                               std::span<const double> analytic, double eps, const std::string& label) {
  if (analytic.size() != x.size()) throw data_error("check_gradient: analytic gradient size mismatch");
  GradCheckReport r;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + eps;
    const double fp = f(x);
    x[i] = x0 - eps;
    const double fm = f(x);
    x[i] = x0;
    const double err = relative_error(analytic[i], (fp - fm) / (2 * eps));
    if (err > r.max_rel_error || i == 0) {
      r.max_rel_error = err;
      r.worst = label + "[" + std::to_string(i) + "]";
    }
    ++r.checked;
  }
  return r;
}

GradCheckReport grad_check_report(const Network<double>& net, const ParamSet<double>& params, const TensorD& input,
                                  const GradCheckOptions& opt) {
  if (!(opt.eps >= 1e-7 && opt.eps <= 1e-3)) throw config_error("grad_check eps must lie in [1e-7, 1e-3]");
  TensorD proj(net.output_shape());
  Rng rng(opt.seed);
  for (auto& v : proj.vec()) v = uniform(rng, -1.0, 1.0);

  auto loss_of = [&](const ParamSet<double>& ps, const TensorD& in) {
    const auto tape = net.forward(ps, in);
    const auto& out = tape.output();
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * proj[i];
    return s;
  };

  ParamSet<double> work = params;
  work.zero_grad();
  const auto tape = net.forward(work, input);
  TensorD grad_in;
  net.backward(work, tape, proj, opt.check_input ? &grad_in : nullptr);

  GradCheckReport total;
  auto merge = [&](const GradCheckReport& r) {
    if (r.max_rel_error >= total.max_rel_error && !r.worst.empty()) {
      total.max_rel_error = r.max_rel_error;
      total.worst = r.worst;
    }
    total.checked += r.checked;
  };

  for (auto& p : work.params()) {
    std::vector<double> analytic(p.grad.vec());
    for (auto& a : analytic) a *= 1.0 + opt.corrupt;
    ParamSet<double> probe = work;
    auto& target = probe.at(p.name).value;
    auto f = [&](std::span<const double> x) {
      std::copy(x.begin(), x.end(), target.vec().begin());
      return loss_of(probe, input);
    };
    merge(check_gradient(f, p.value.vec(), analytic, opt.eps, p.name));
  }
  if (opt.check_input) {
    std::vector<double> analytic(grad_in.vec());
    for (auto& a : analytic) a *= 1.0 + opt.corrupt;
    TensorD probe = input;
    auto f = [&](std::span<const double> x) {
      std::copy(x.begin(), x.end(), probe.vec().begin());
      return loss_of(work, probe);
    };
    merge(check_gradient(f, input.vec(), analytic, opt.eps, "input"));
  }
  return total;
}

}  // namespace agrpose
