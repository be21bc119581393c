#include <omp.h>

#include <cmath>
#include <random>
#include <vector>

#include "agrpose/kernels/conv.hpp"
#include "doctest.h"

using namespace agrpose::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

ConvGeometry random_geometry(std::mt19937_64& rng, bool three_d) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  for (;;) {
    ConvGeometry g;
    g.in_ch = pick(1, 3);
    g.out_ch = pick(1, 3);
    for (int a = three_d ? 0 : 1; a < 3; ++a) {
      g.in[a] = pick(3, 9);
      g.kernel[a] = pick(1, 3);
      g.stride[a] = pick(0, 3) == 0 ? 2 : 1;
      g.dilation[a] = pick(0, 3) == 0 ? 2 : 1;
      g.pad[a] = pick(0, 2);
    }
    if (g.valid()) return g;
  }
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("parallel conv kernels agree with the serial reference") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const ConvGeometry g = random_geometry(rng, trial % 2 == 0);
    CAPTURE(trial);
    const auto in = random_vec(g.in_size(), rng);
    const auto w = random_vec(g.weight_size(), rng);
    const auto b = random_vec(g.out_ch, rng);
    const auto go = random_vec(g.out_size(), rng);

    std::vector<double> out(g.out_size()), ref_out(g.out_size());
    conv_forward(g, in.data(), w.data(), b.data(), out.data());
    reference::conv_forward(g, in.data(), w.data(), b.data(), ref_out.data());
    CHECK(max_abs_diff(out, ref_out) < 1e-12);

    std::vector<double> gi(g.in_size(), 9.0), ref_gi(g.in_size(), -9.0);
    conv_backward_input(g, go.data(), w.data(), gi.data());
    reference::conv_backward_input(g, go.data(), w.data(), ref_gi.data());
    CHECK(max_abs_diff(gi, ref_gi) < 1e-12);

    // Weight gradients accumulate into what is already there.
    std::vector<double> gw(g.weight_size(), 0.5), ref_gw(g.weight_size(), 0.5);
    std::vector<double> gb(g.out_ch, 0.25), ref_gb(g.out_ch, 0.25);
    conv_backward_weight(g, in.data(), go.data(), gw.data(), gb.data());
    reference::conv_backward_weight(g, in.data(), go.data(), ref_gw.data(), ref_gb.data());
    CHECK(max_abs_diff(gw, ref_gw) < 1e-12);
    CHECK(max_abs_diff(gb, ref_gb) < 1e-12);
  }
}

TEST_CASE("conv results do not depend on the thread count") {
  std::mt19937_64 rng(7);
  ConvGeometry g;
  g.in_ch = 3;
  g.out_ch = 4;
  g.in = {6, 9, 11};
  g.kernel = {3, 3, 3};
  g.pad = {1, 1, 1};
  const auto in = random_vec(g.in_size(), rng);
  const auto w = random_vec(g.weight_size(), rng);
  const auto go = random_vec(g.out_size(), rng);

  auto run = [&](int threads) {
    omp_set_num_threads(threads);
    std::vector<double> out(g.out_size()), gi(g.in_size()), gw(g.weight_size());
    conv_forward(g, in.data(), w.data(), static_cast<const double*>(nullptr), out.data());
    conv_backward_input(g, go.data(), w.data(), gi.data());
    conv_backward_weight(g, in.data(), go.data(), gw.data(), static_cast<double*>(nullptr));
    out.insert(out.end(), gi.begin(), gi.end());
    out.insert(out.end(), gw.begin(), gw.end());
    return out;
  };
  const auto one = run(1);
  const auto four = run(4);
  omp_set_num_threads(omp_get_num_procs());
  CHECK(one == four);
}

TEST_CASE("single-precision kernels track the double-precision reference") {
  std::mt19937_64 rng(3);
  const ConvGeometry g = random_geometry(rng, true);
  const auto in = random_vec(g.in_size(), rng);
  const auto w = random_vec(g.weight_size(), rng);
  std::vector<float> inf(in.begin(), in.end()), wf(w.begin(), w.end()), outf(g.out_size());
  std::vector<double> ref(g.out_size());
  conv_forward(g, inf.data(), wf.data(), static_cast<const float*>(nullptr), outf.data());
  reference::conv_forward(g, in.data(), w.data(), static_cast<const double*>(nullptr), ref.data());
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(outf[i] - ref[i]) < 1e-4);
}
