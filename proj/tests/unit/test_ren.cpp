#include <cmath>
#include <random>

#include "agrpose/core/gradcheck.hpp"
#include "agrpose/ren/ren.hpp"
#include "agrpose/synth/dataset.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace agrpose;
using namespace agrpose::ren;

namespace {

Camera scene_camera() { return look_camera(100, 0.35, 0.3, {-1800, -5600, 3000}, 40, 30); }

GridSpec small_grid() { return GridSpec::centered({0, 0, 900}, {3000, 3000, 1800}, {10, 10, 6}); }

double bilinear(const TensorD& h, int c, double u, double v) {
  const int x0 = int(std::floor(u)), y0 = int(std::floor(v));
  const int x1 = std::min(x0 + 1, int(h.dim(2)) - 1), y1 = std::min(y0 + 1, int(h.dim(1)) - 1);
  const double ax = u - x0, ay = v - y0;
  return (1 - ay) * ((1 - ax) * h.at(c, y0, x0) + ax * h.at(c, y0, x1)) +
         ay * ((1 - ax) * h.at(c, y1, x0) + ax * h.at(c, y1, x1));
}

TensorF gaussian_blob(const GridSpec& g, Vec3 c, double sigma, float scale = 1) {
  TensorF v({1, std::size_t(g.dims[2]), std::size_t(g.dims[1]), std::size_t(g.dims[0])});
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        const double d2 = (i - c.x) * (i - c.x) + (j - c.y) * (j - c.y) + (k - c.z) * (k - c.z);
        v[g.offset({i, j, k})] = std::max(v[g.offset({i, j, k})], float(scale * std::exp(-d2 / (2 * sigma * sigma))));
      }
  return v;
}

// Brute-force peak scan: every voxel tested against all 26 neighbours, then
// greedy acceptance.
std::vector<VoxelIndex> brute_nms(const TensorF& v, const GridSpec& g, int radius, double thr, int max_people) {
  std::vector<std::pair<float, std::size_t>> peaks;
  for (std::size_t o = 0; o < v.size(); ++o) {
    const int i = int(o % g.dims[0]), j = int(o / g.dims[0] % g.dims[1]), k = int(o / (g.dims[0] * g.dims[1]));
    if (v[o] < thr) continue;
    bool ok = true;
    for (std::size_t n = 0; n < v.size(); ++n) {
      const int a = int(n % g.dims[0]), b = int(n / g.dims[0] % g.dims[1]), c = int(n / (g.dims[0] * g.dims[1]));
      if (n == o || std::max({std::abs(a - i), std::abs(b - j), std::abs(c - k)}) > 1) continue;
      if (v[n] > v[o] || (v[n] == v[o] && n < o)) ok = false;
    }
    if (ok) peaks.push_back({v[o], o});
  }
  std::sort(peaks.begin(), peaks.end(), [](auto x, auto y) { return x.first > y.first || (x.first == y.first && x.second < y.second); });
  std::vector<VoxelIndex> out;
  for (auto [val, o] : peaks) {
    if (int(out.size()) >= max_people) break;
    const VoxelIndex idx{int(o % g.dims[0]), int(o / g.dims[0] % g.dims[1]), int(o / (g.dims[0] * g.dims[1]))};
    bool far = true;
    for (const auto& q : out)
      if (std::max({std::abs(q[0] - idx[0]), std::abs(q[1] - idx[1]), std::abs(q[2] - idx[2])}) <= radius) far = false;
    if (far) out.push_back(idx);
  }
  return out;
}

}  // namespace

TEST_CASE("depth gate spot values") {
  CHECK(depth_gate(4000, 4000, 200) == 1.0);
  CHECK(std::abs(depth_gate(4200, 4000, 200) - std::exp(-0.5)) < 1e-12);
  CHECK(std::abs(depth_gate(3800, 4000, 200) - std::exp(-0.5)) < 1e-12);
  // Monotone in |z - depth|.
  double prev = 2;
  for (double dz = 0; dz < 1000; dz += 7.5) {
    const double g = depth_gate(5000 + dz, 5000, 200);
    CHECK(g <= prev);
    prev = g;
  }
}

TEST_CASE("depth map: affine range, scaled by focal when normalized") {
  const NetSpec spec{{2, 5, 6}, {LayerSpec::conv2d(2, 1, 3, 1), LayerSpec::sigmoid()}};
  const Network<float> de(spec);
  const auto params = de.init_params(7);
  const TensorF h = testutil::random_tensor<float>({2, 5, 6}, 3);
  const TensorF unit = de.forward(params, h).output();

  DepthRange raw{2000, 9000};
  const auto cam = scene_camera();
  const auto a = estimate_depth_map(de, params, h, raw, cam);
  CHECK(a.at(0, 2, 3) == float(2000 + 7000 * double(unit.at(0, 2, 3))));

  DepthRange norm = raw;
  norm.ref_focal = 80;  // the camera has f = 100
  CHECK(norm.scale(cam) == doctest::Approx(1.25));
  const auto b = estimate_depth_map(de, params, h, norm, cam);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(b.vec()[i] == doctest::Approx(1.25 * a.vec()[i]).epsilon(1e-6));
  CHECK_THROWS_AS(estimate_depth_map(de, params, TensorF({2, 5, 5}), raw, cam), Error);
}

TEST_CASE("gated volume at the detection depth equals the sampled heatmap") {
  const Camera cam = scene_camera();
  const GridSpec g = small_grid();
  const auto h = testutil::random_tensor<double>({2, 30, 40}, 4, 0, 1);
  const VoxelIndex idx{5, 4, 2};
  const auto pr = project(cam, voxel_center(g, idx));
  PersonDetection det;
  det.box = {0, 0, 39, 29};
  det.depth = pr.depth;
  auto vol = build_root_volume(h, {det}, g, cam);
  CHECK(vol.at(1, 2, 4, 5) == doctest::Approx(bilinear(h, 1, pr.u, pr.v)).epsilon(1e-14));
  det.depth = pr.depth + 200;
  vol = build_root_volume(h, {det}, g, cam, 200);
  CHECK(vol.at(1, 2, 4, 5) == doctest::Approx(bilinear(h, 1, pr.u, pr.v) * std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("volume kernels equal the serial references bitwise") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0, 1);
  for (int seed = 0; seed < 10; ++seed) {
    const Camera cam = look_camera(80 + 40 * U(rng), 0.5 * U(rng), 6 * U(rng), {0, 0, 0}, 40, 30);
    Camera placed = cam;
    placed.t = cam.t - cam.R * (Vec3{0, 0, 900} - 5000.0 * cam.R.row(2));
    const GridSpec g = small_grid();
    const auto h = testutil::random_tensor<double>({3, 30, 40}, seed, 0, 1);
    std::vector<PersonDetection> dets;
    for (int p = 0; p < 3; ++p) {
      PersonDetection d;
      d.u = 40 * U(rng);
      d.v = 30 * U(rng);
      d.box = {d.u - 10 * U(rng), d.v - 10 * U(rng), d.u + 10 * U(rng), d.v + 10 * U(rng)};
      d.depth = 3500 + 3000 * U(rng);
      dets.push_back(d);
    }
    const auto fast = build_root_volume(h, dets, g, placed);
    const auto slow = reference::build_root_volume(h, dets, g, placed);
    CHECK(bitwise_equal(fast, slow));
    const auto naive = build_naive_volume(h, g, placed);
    CHECK(bitwise_equal(naive, reference::build_naive_volume(h, g, placed)));
    for (std::size_t i = 0; i < fast.size(); ++i) CHECK(fast[i] <= naive[i]);
    const bool any = std::any_of(naive.vec().begin(), naive.vec().end(), [](double v) { return v > 0; });
    CHECK(any);
  }
}

TEST_CASE("naive volume is the gated volume with a full-image box and infinite sigma") {
  const Camera cam = scene_camera();
  const GridSpec g = small_grid();
  const auto h = testutil::random_tensor<double>({2, 30, 40}, 8, 0, 1);
  PersonDetection all;
  all.box = {-1, -1, 40, 30};
  all.depth = 5000;
  CHECK(bitwise_equal(build_root_volume(h, {all}, g, cam, 1e150), build_naive_volume(h, g, cam)));
  const auto none = build_root_volume(h, {}, g, cam);
  CHECK(std::all_of(none.vec().begin(), none.vec().end(), [](double v) { return v == 0; }));
}

TEST_CASE("voxels sharing a projection ray receive the same naive value") {
  Camera cam;  // world == camera frame, looking along +z
  cam.fx = cam.fy = 50;
  cam.cx = 19.5;
  cam.cy = 14.5;
  cam.width = 40;
  cam.height = 30;
  // Voxel centres at x = y = 0 all project to the principal point.
  const GridSpec g = GridSpec::centered({0, 0, 4000}, {300, 300, 3000}, {3, 3, 10});
  const auto h = testutil::random_tensor<double>({1, 30, 40}, 3, 0, 1);
  const auto vol = build_naive_volume(h, g, cam);
  for (int k = 1; k < 10; ++k) CHECK(vol.at(0, k, 1, 1) == vol.at(0, 0, 1, 1));
  CHECK(vol.at(0, 0, 1, 1) == doctest::Approx(bilinear(h, 0, 19.5, 14.5)));
}

TEST_CASE("volume sidecar round-trip") {
  testutil::TempDir dir("vol");
  const GridSpec g = small_grid();
  const auto v = testutil::random_tensor<float>({2, 6, 10, 10}, 1);
  write_volume(dir / "v", g, v);
  const auto [g2, v2] = read_volume(dir / "v");
  CHECK(g2 == g);
  CHECK(bitwise_equal(v2, v));
  CHECK_THROWS_AS(write_volume(dir / "bad", g, testutil::random_tensor<float>({2, 6, 10, 9}, 1)), Error);
}

TEST_CASE("nms_3d: blobs, thresholds and brute-force agreement") {
  const GridSpec g = GridSpec::centered({0, 0, 0}, {16, 16, 16}, {16, 16, 16});
  auto one = nms_3d(gaussian_blob(g, {5, 6, 7}, 1.5), g, {1, 0.3, 10});
  REQUIRE(one.size() == 1);
  CHECK(one[0].index == VoxelIndex{5, 6, 7});
  CHECK(one[0].world == voxel_center(g, {5, 6, 7}));
  CHECK(nms_3d(gaussian_blob(g, {5, 6, 7}, 1.5, 0.2f), g, {1, 0.3, 10}).empty());

  auto two_blobs = gaussian_blob(g, {4, 8, 8}, 1.0);
  const auto b2 = gaussian_blob(g, {10, 8, 8}, 1.0, 0.8f);
  for (std::size_t i = 0; i < two_blobs.size(); ++i) two_blobs[i] = std::max(two_blobs[i], b2[i]);
  const auto two = nms_3d(two_blobs, g, {2, 0.3, 10});
  REQUIRE(two.size() == 2);
  CHECK(two[0].confidence > two[1].confidence);
  const auto brute = brute_nms(two_blobs, g, 2, 0.3, 10);
  CHECK(brute.size() == 2);
  CHECK(two[0].index == brute[0]);
  CHECK(two[1].index == brute[1]);

  for (int seed = 0; seed < 5; ++seed) {
    const auto noise = testutil::random_tensor<float>({1, 16, 16, 16}, 100 + seed, 0, 1);
    const auto got = nms_3d(noise, g, {2, 0.5, 12});
    const auto want = brute_nms(noise, g, 2, 0.5, 12);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].index == want[i]);
  }
  CHECK_THROWS_AS(nms_3d(gaussian_blob(g, {1, 1, 1}, 1), g, {0, 0.3, 10}), Error);
}

TEST_CASE("detect_persons_2d on clean synthetic samples") {
  const auto skel = synth::default_skeleton();
  synth::SynthConfig cfg;
  cfg.min_people = cfg.max_people = 1;
  cfg.camera.theta = {0.3, 0.3};
  cfg.camera.yaw = {-3, 3};
  for (int i = 0; i < 10; ++i) {
    const auto s = synth::generate_scene(cfg, skel, i);
    TensorF depth({1, std::size_t(s.height()), std::size_t(s.width())}, float(s.depth_targets[0]));
    const auto dets = detect_persons_2d(s.heatmaps, s.box_map, depth, skel.root);
    REQUIRE(dets.size() == 1);
    CHECK(dets[0].u == s.root_pixels[0][0]);
    CHECK(dets[0].v == s.root_pixels[0][1]);
    const auto [u, v] = s.root_pixels[0];
    CHECK(dets[0].box.left == doctest::Approx(u - s.box_map.at(0, v, u)));
    CHECK(dets[0].box.bottom == doctest::Approx(v + s.box_map.at(3, v, u)));
    CHECK(dets[0].depth == float(s.depth_targets[0]));
  }
  TensorF zeros({15, 64, 120}), box({4, 64, 120}), depth({1, 64, 120}, 5000);
  CHECK(detect_persons_2d(zeros, box, depth, 0).empty());

  // Two peaks 40 px apart.
  const auto two = synth::render_peaks({{0, 20, 30, 0.9}, {0, 60, 30, 0.7}}, 1, 120, 64, 1.5);
  const auto d2 = detect_persons_2d(two, box, depth, 0, {0.3, 5, 10});
  REQUIRE(d2.size() == 2);
  CHECK(d2[0].u == 20);
  CHECK(d2[1].u == 60);
  CHECK(d2[0].confidence > d2[1].confidence);
  for (const auto& d : d2) CHECK(d.box.width() > 0);
}

TEST_CASE("loss_depth and loss_ren: worked values and gradients") {
  TensorD D({1, 4, 6}, 3000.0);
  CHECK(loss_depth(D, {{1, 1}, {2, 3}}, {3000, 3000}).value == 0);
  D.at(0, 1, 1) = 3200;
  D.at(0, 3, 2) = 2900;
  CHECK(loss_depth(D, {{1, 1}, {2, 3}}, {3000, 3000}).value == 300);
  CHECK(loss_depth(D, {{2, 3}, {1, 1}}, {3000, 3000}).value == 300);
  CHECK_THROWS_AS(loss_depth(D, {{6, 0}}, {3000}), Error);

  TensorD a({1, 2, 2, 2}), b({1, 2, 2, 2});
  CHECK(loss_ren(a, b).value == 0);
  a[5] = 0.3;
  CHECK(loss_ren(a, b).value == doctest::Approx(0.09));
  CHECK_THROWS_AS(loss_ren(a, TensorD({1, 2, 2, 3})), Error);

  const auto h = testutil::random_tensor<double>({1, 3, 4, 5}, 1), t = testutil::random_tensor<double>({1, 3, 4, 5}, 2);
  const auto lr = loss_ren(h, t);
  auto f = [&](std::span<const double> x) {
    return loss_ren(TensorD(h.dims(), std::vector<double>(x.begin(), x.end())), t).value;
  };
  CHECK(check_gradient(f, h.vec(), lr.grad.vec(), 1e-5).max_rel_error < 1e-6);
  for (std::size_t i = 0; i < h.size(); ++i) CHECK(lr.grad[i] == doctest::Approx(2 * (h[i] - t[i])));
}

TEST_CASE("clean AGR gated volume peaks at the true root voxel") {
  const auto skel = synth::default_skeleton();
  synth::SynthConfig cfg;
  cfg.min_people = cfg.max_people = 1;
  cfg.camera.theta = {0.17, 0.52};
  cfg.camera.yaw = {-3.14, 3.14};
  cfg.camera.distance = {5500, 6500};
  const GridSpec grid = GridSpec::centered({0, 0, 900}, {6000, 6000, 1800}, {40, 40, 12});
  for (int i = 0; i < 10; ++i) {
    const auto s = synth::generate_scene(cfg, skel, 1000 + i);
    const auto vol = build_root_volume(s.heatmaps, detections_at(s, s.depth_targets), grid, s.camera);
    std::size_t best = 0;
    for (std::size_t o = 0; o < grid.voxel_count(); ++o)
      if (vol[skel.root * grid.voxel_count() + o] > vol[skel.root * grid.voxel_count() + best]) best = o;
    const VoxelIndex got{int(best % 40), int(best / 40 % 40), int(best / 1600)};
    const VoxelIndex want = nearest_voxel(grid, s.gt_poses[0].joints[skel.root]);
    for (int a = 0; a < 3; ++a) CHECK(std::abs(got[a] - want[a]) <= 1);
  }
}
