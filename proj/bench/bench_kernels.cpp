// Parallel kernels against their serial references at the shapes used in training.

#include <benchmark/benchmark.h>

#include <random>

#include "agrpose/kernels/conv.hpp"
#include "agrpose/ren/ren.hpp"

using namespace agrpose;
namespace K = agrpose::kernels;

namespace {

std::vector<float> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1, 1);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// REN: 15 joint channels into 8 features over a 40x40x12 grid.
K::ConvGeometry ren_conv() {
  K::ConvGeometry g;
  g.in_ch = 15;
  g.out_ch = 8;
  g.in = {12, 40, 40};
  g.kernel = {3, 3, 3};
  g.pad = {1, 1, 1};
  return g;
}

// DE: dilated 16-channel 2D layer on a 60x96 heatmap.
K::ConvGeometry de_conv() {
  K::ConvGeometry g;
  g.in_ch = 16;
  g.out_ch = 16;
  g.in = {1, 60, 96};
  g.kernel = {1, 3, 3};
  g.pad = {0, 4, 4};
  g.dilation = {1, 4, 4};
  return g;
}

template <class Fn>
void conv_forward_bench(benchmark::State& state, K::ConvGeometry g, Fn fn) {
  const auto in = noise(g.in_size(), 1), w = noise(g.weight_size(), 2), b = noise(g.out_ch, 3);
  std::vector<float> out(g.out_size());
  for (auto _ : state) {
    fn(g, in.data(), w.data(), b.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_conv3d_forward_parallel(benchmark::State& s) { conv_forward_bench(s, ren_conv(), K::conv_forward<float>); }
void BM_conv3d_forward_serial(benchmark::State& s) {
  conv_forward_bench(s, ren_conv(), K::reference::conv_forward<float>);
}
void BM_conv2d_dilated_forward_parallel(benchmark::State& s) {
  conv_forward_bench(s, de_conv(), K::conv_forward<float>);
}
void BM_conv2d_dilated_forward_serial(benchmark::State& s) {
  conv_forward_bench(s, de_conv(), K::reference::conv_forward<float>);
}

void backward(benchmark::State& state, bool parallel) {
  const auto g = ren_conv();
  const auto in = noise(g.in_size(), 1), w = noise(g.weight_size(), 2), go = noise(g.out_size(), 3);
  std::vector<float> gi(g.in_size()), gw(g.weight_size()), gb(g.out_ch);
  for (auto _ : state) {
    if (parallel) {
      K::conv_backward_input(g, go.data(), w.data(), gi.data());
      K::conv_backward_weight(g, in.data(), go.data(), gw.data(), gb.data());
    } else {
      K::reference::conv_backward_input(g, go.data(), w.data(), gi.data());
      K::reference::conv_backward_weight(g, in.data(), go.data(), gw.data(), gb.data());
    }
    benchmark::DoNotOptimize(gw.data());
  }
}
void BM_conv3d_backward_parallel(benchmark::State& s) { backward(s, true); }
void BM_conv3d_backward_serial(benchmark::State& s) { backward(s, false); }

struct VolumeCase {
  TensorF heatmaps;
  GridSpec grid;
  Camera cam;
  std::vector<ren::PersonDetection> dets;
};

VolumeCase volume_case() {
  VolumeCase c;
  const auto h = noise(15 * 60 * 96, 4);
  c.heatmaps = TensorF({15, 60, 96}, std::vector<float>(h.begin(), h.end()));
  for (auto& x : c.heatmaps.vec()) x = 0.5f * (x + 1);
  c.grid = GridSpec::centered({0, 0, 900}, {6000, 6000, 1800}, {40, 40, 12});
  c.cam = look_camera(100, 0.35, 0.4, {-2300, -5500, 3000}, 96, 60);
  for (int p = 0; p < 3; ++p) {
    ren::PersonDetection d;
    d.u = 20 + 25 * p;
    d.v = 30;
    d.box = {d.u - 8, 10, d.u + 8, 55};
    d.depth = 5000 + 600 * p;
    c.dets.push_back(d);
  }
  return c;
}

void BM_gated_volume_parallel(benchmark::State& state) {
  const auto c = volume_case();
  for (auto _ : state) benchmark::DoNotOptimize(ren::build_root_volume(c.heatmaps, c.dets, c.grid, c.cam));
}
void BM_gated_volume_serial(benchmark::State& state) {
  const auto c = volume_case();
  for (auto _ : state) benchmark::DoNotOptimize(ren::reference::build_root_volume(c.heatmaps, c.dets, c.grid, c.cam));
}
void BM_naive_volume_parallel(benchmark::State& state) {
  const auto c = volume_case();
  for (auto _ : state) benchmark::DoNotOptimize(ren::build_naive_volume(c.heatmaps, c.grid, c.cam));
}
void BM_naive_volume_serial(benchmark::State& state) {
  const auto c = volume_case();
  for (auto _ : state) benchmark::DoNotOptimize(ren::reference::build_naive_volume(c.heatmaps, c.grid, c.cam));
}

}  // namespace

BENCHMARK(BM_conv3d_forward_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv3d_forward_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv3d_backward_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv3d_backward_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv2d_dilated_forward_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_conv2d_dilated_forward_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_gated_volume_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_gated_volume_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_naive_volume_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_naive_volume_serial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
