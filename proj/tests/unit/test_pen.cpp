#include <cmath>
#include <random>

#include "agrpose/core/gradcheck.hpp"
#include "agrpose/pen/pen.hpp"
#include "agrpose/ren/ren.hpp"
#include "agrpose/synth/dataset.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace agrpose;
using namespace agrpose::pen;

namespace {

TensorD one_hot(int n, int d, std::vector<std::pair<VoxelIndex, double>> mass) {
  TensorD h({std::size_t(n), std::size_t(d), std::size_t(d), std::size_t(d)});
  for (auto [idx, m] : mass) h.at(0, idx[2], idx[1], idx[0]) += m;
  return h;
}

}  // namespace

TEST_CASE("fine grid geometry") {
  const GridSpec g = fine_grid({100, 200, 900}, 2000, 64);
  CHECK(g.voxel_size.x == 31.25);
  CHECK(g.center() == Vec3{100, 200, 900});
  CHECK_THROWS_AS(fine_grid({}, 0, 64), Error);
}

TEST_CASE("integral decode worked examples") {
  const GridSpec g = fine_grid({0, 0, 0}, 2000, 8);
  auto p = integral_decode(one_hot(1, 8, {{{3, 4, 5}, 1.0}}), g);
  CHECK(p.joints[0].x == g.origin.x + 3.5 * g.voxel_size.x);
  CHECK(p.joints[0].y == g.origin.y + 4.5 * g.voxel_size.y);
  CHECK(p.joints[0].z == g.origin.z + 5.5 * g.voxel_size.z);

  const auto idx = integral_decode_index(one_hot(1, 8, {{{3, 4, 5}, 0.5}, {{5, 4, 5}, 0.5}}));
  CHECK(idx[0] == Vec3{4, 4, 5});

  TensorD uniform({1, 8, 8, 8}, 1.0 / 512);
  CHECK(distance(integral_decode(uniform, g).joints[0], g.center()) < 1e-9);

  // Unnormalised input is renormalised.
  CHECK(integral_decode_index(one_hot(1, 8, {{{1, 2, 3}, 7.0}}))[0] == Vec3{1, 2, 3});
  CHECK_THROWS_AS(integral_decode_index(TensorD({1, 4, 4, 4})), Error);
}

TEST_CASE("decoding shifts with the grid origin") {
  const auto h = testutil::random_tensor<double>({3, 8, 8, 8}, 2, 0, 1);
  GridSpec g = fine_grid({0, 0, 1024}, 2048, 8);
  const auto a = integral_decode(h, g);
  g.origin += Vec3{512, -256, 128};
  const auto b = integral_decode(h, g);
  for (int k = 0; k < 3; ++k) CHECK(distance(b.joints[k] - a.joints[k], Vec3{512, -256, 128}) < 1e-9);
}

TEST_CASE("decode of a truncated Gaussian recovers its mean") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0, 1);
  const int D = 16;
  for (int trial = 0; trial < 10; ++trial) {
    const double sigma = 0.5 + 1.5 * U(rng);
    const Vec3 mean{3 + (D - 7) * U(rng), 3 + (D - 7) * U(rng), 3 + (D - 7) * U(rng)};
    TensorD h({1, D, D, D});
    for (int k = 0; k < D; ++k)
      for (int j = 0; j < D; ++j)
        for (int i = 0; i < D; ++i) {
          const double d2 = (i - mean.x) * (i - mean.x) + (j - mean.y) * (j - mean.y) + (k - mean.z) * (k - mean.z);
          if (d2 <= 9 * sigma * sigma) h.at(0, k, j, i) = std::exp(-d2 / (2 * sigma * sigma));
        }
    const Vec3 got = integral_decode_index(h)[0];
    for (int a = 0; a < 3; ++a) CHECK(std::abs(got[a] - mean[a]) < 0.1);
  }
}

TEST_CASE("loss_pen worked values, masking and units") {
  const GridSpec g = fine_grid({0, 0, 0}, 2000, 32);
  std::vector<Vec3> gt(15, Vec3{10, 11, 12});
  CHECK(loss_pen(gt, gt, g).value == 0);
  auto dec = gt;
  dec[4] += Vec3{1, 2, 3};
  CHECK(loss_pen(dec, gt, g).value == doctest::Approx(0.4));
  CHECK(loss_pen(dec, gt, g, true).value == doctest::Approx(0.4 * 62.5));
  auto outside = gt;
  outside[4] = {40, 11, 12};
  const auto masked = loss_pen(dec, outside, g);
  CHECK(masked.masked == 1);
  CHECK(masked.value == 0);
  CHECK_THROWS_AS(loss_pen(dec, std::vector<Vec3>(3), g), Error);
}

TEST_CASE("composite softmax -> decode -> L1 gradient matches finite differences") {
  Network<double> head({{3, 5, 5, 5}, {LayerSpec::softmax()}});
  ParamSet<double> none;
  const GridSpec g = fine_grid({0, 0, 0}, 500, 5);
  const auto logits = testutil::random_tensor<double>({3, 5, 5, 5}, 6, -2, 2);
  const std::vector<Vec3> target{{1.3, 2.2, 0.7}, {3.9, 0.4, 2.6}, {2.0, 2.1, 3.3}};

  auto loss_of = [&](const TensorD& x) {
    const auto out = head.forward(none, x).output();
    return loss_pen(integral_decode_index(out), target, g).value;
  };
  const auto tape = head.forward(none, logits);
  const auto lp = loss_pen(integral_decode_index(tape.output()), target, g);
  const auto gh = integral_decode_backward(tape.output(), lp.grad);
  TensorD grad_logits;
  head.backward(none, tape, gh, &grad_logits);

  auto f = [&](std::span<const double> x) { return loss_of(TensorD(logits.dims(), std::vector<double>(x.begin(), x.end()))); };
  CHECK(check_gradient(f, logits.vec(), grad_logits.vec(), 1e-5).max_rel_error < 1e-6);

  // Decode backward alone, on unnormalised input.
  const auto h = testutil::random_tensor<double>({3, 5, 5, 5}, 9, 0.1, 1);
  const std::vector<Vec3> gj{{0.3, -1, 2}, {1, 1, 1}, {-0.5, 0.25, 0}};
  const auto dh = integral_decode_backward(h, gj);
  auto fd = [&](std::span<const double> x) {
    const auto J = integral_decode_index(TensorD(h.dims(), std::vector<double>(x.begin(), x.end())));
    double s = 0;
    for (int k = 0; k < 3; ++k) s += dot(J[k], gj[k]);
    return s;
  };
  CHECK(check_gradient(fd, h.vec(), dh.vec(), 1e-5).max_rel_error < 1e-6);
}

TEST_CASE("person volume: oracle equality and joints on their viewing rays") {
  const auto skel = synth::default_skeleton();
  synth::SynthConfig cfg;
  cfg.min_people = cfg.max_people = 1;
  cfg.camera.theta = {0.3, 0.3};
  cfg.camera.yaw = {-3, 3};
  const auto s = synth::generate_scene(cfg, skel, 4);
  const auto hd = tensor_cast<double>(s.heatmaps);
  const Vec3 root = s.gt_poses[0].joints[skel.root];

  const GridSpec small = fine_grid(root, 2000, 8);
  CHECK(bitwise_equal(build_person_volume(hd, s.camera, small), ren::reference::build_naive_volume(hd, small, s.camera)));

  // Along a ray the ungated volume is constant, so the argmax can sit anywhere
  // on it; what must hold is that it lies on (within a voxel of) the joint's ray.
  const GridSpec fine = fine_grid(root, 2000, 32);
  const auto vol = build_person_volume(hd, s.camera, fine);
  const std::size_t V = fine.voxel_count();
  const Vec3 cam_c = s.camera.center();
  for (int k = 0; k < skel.joint_count(); ++k) {
    const Vec3 joint = s.gt_poses[0].joints[k];
    if (!fine.contains(nearest_voxel(fine, joint))) continue;
    std::size_t best = 0;
    for (std::size_t o = 0; o < V; ++o)
      if (vol[k * V + o] > vol[k * V + best]) best = o;
    const Vec3 c = voxel_center(fine, {int(best % 32), int(best / 32 % 32), int(best / 1024)});
    const Vec3 ray = (1.0 / norm(joint - cam_c)) * (joint - cam_c);
    const Vec3 rel = c - cam_c;
    const double off_ray = norm(rel - dot(rel, ray) * ray);
    CHECK(off_ray < norm(fine.voxel_size));
  }
}

TEST_CASE("estimate_person shares parameters across people and stays inside the cube") {
  const auto skel = synth::default_skeleton();
  synth::SynthConfig cfg;
  cfg.min_people = cfg.max_people = 2;
  const auto s = synth::generate_scene(cfg, skel, 2);
  Network<float> net({{15, 8, 8, 8}, {LayerSpec::conv3d(15, 15, 3, 1), LayerSpec::softmax()}});
  const auto params = net.init_params(3);
  for (int p = 0; p < 2; ++p) {
    const Vec3 root = s.gt_poses[p].joints[skel.root];
    const auto est = estimate_person(net, params, s.heatmaps, s.camera, root, skel.root, 2000);
    CHECK(est.refined_root == est.pose.joints[skel.root]);
    for (const auto& j : est.pose.joints)
      for (int a = 0; a < 3; ++a) CHECK(std::abs(j[a] - root[a]) <= 1000);
  }
}
