#include "agrpose/pipeline/gradcheck_suite.hpp"

#include <functional>

#include "agrpose/core/gradcheck.hpp"
#include "agrpose/core/random.hpp"
#include "agrpose/pen/pen.hpp"
#include "agrpose/ren/ren.hpp"
#include "agrpose/synth/agr.hpp"

namespace agrpose::pipeline {

namespace {

TensorD random_tensor(const Shape& dims, std::uint64_t seed, double lo = -1, double hi = 1) {
  TensorD t(dims);
  Rng rng(seed);
  for (auto& v : t.vec()) v = uniform(rng, lo, hi);
  return t;
}

TensorD from_span(const Shape& dims, std::span<const double> x) { return TensorD(dims, std::vector<double>(x.begin(), x.end())); }

struct Suite {
  double eps, tol, corrupt;
  std::vector<GradCheckLine> lines;

  void add(const std::string& name, const GradCheckReport& r) {
    lines.push_back({name, r.max_rel_error, r.checked, r.max_rel_error < tol});
  }

  void layer(const std::string& name, NetSpec spec, std::uint64_t seed) {
    Network<double> net(std::move(spec));
    const auto params = net.init_params(seed);
    GradCheckOptions opt;
    opt.eps = eps;
    opt.seed = seed + 1;
    opt.corrupt = corrupt;
    add(name, grad_check_report(net, params, random_tensor(net.spec().input, seed + 2), opt));
  }

  // Scalar loss f(x) with analytic gradient g at x.
  void loss(const std::string& name, const TensorD& x, const std::vector<double>& g,
            const std::function<double(const TensorD&)>& f) {
    std::vector<double> analytic = g;
    for (auto& a : analytic) a *= 1.0 + corrupt;
    const auto dims = x.dims();
    add(name, check_gradient([&](std::span<const double> v) { return f(from_span(dims, v)); }, x.vec(), analytic, eps,
                             name));
  }
};

}  // namespace

std::vector<GradCheckLine> run_gradcheck_suite(double eps, double tolerance, double corrupt) {
  Suite s{eps, tolerance, corrupt, {}};

  // Layers.
  s.layer("conv2d", {{3, 7, 8}, {LayerSpec::conv2d(3, 4, 3, 1)}}, 10);
  s.layer("conv2d_dilated", {{3, 9, 9}, {LayerSpec::conv2d(3, 2, 3, 2, 1, 2)}}, 20);
  s.layer("conv2d_strided", {{2, 9, 8}, {LayerSpec::conv2d(2, 3, 3, 1, 2)}}, 30);
  s.layer("conv3d", {{2, 5, 6, 5}, {LayerSpec::conv3d(2, 3, 3, 1)}}, 40);
  s.layer("conv3d_strided_dilated", {{2, 7, 7, 6}, {LayerSpec::conv3d(2, 2, 3, 2, 2, 2)}}, 50);
  s.layer("relu", {{2, 5, 6}, {LayerSpec::relu()}}, 60);
  s.layer("sigmoid", {{2, 5, 6}, {LayerSpec::sigmoid()}}, 70);
  s.layer("spatial_softmax", {{3, 4, 3, 5}, {LayerSpec::softmax()}}, 80);
  s.layer("bias_add", {{3, 4, 5}, {LayerSpec::bias_add(3)}}, 90);
  s.layer("depth_net", {{4, 10, 12},
                        {LayerSpec::conv2d(4, 3, 3, 1), LayerSpec::relu(), LayerSpec::conv2d(3, 3, 3, 2, 1, 2),
                         LayerSpec::relu(), LayerSpec::conv2d(3, 1, 3, 1), LayerSpec::sigmoid()}},
          100);
  s.layer("root_net", {{3, 4, 5, 5},
                       {LayerSpec::conv3d(3, 2, 3, 1), LayerSpec::relu(), LayerSpec::conv3d(2, 1, 3, 1),
                        LayerSpec::sigmoid()}},
          110);
  s.layer("pose_net", {{3, 4, 4, 4},
                       {LayerSpec::conv3d(3, 2, 3, 1), LayerSpec::relu(), LayerSpec::conv3d(2, 3, 3, 1),
                        LayerSpec::softmax()}},
          120);

  // 2D supervision: heatmap SSE plus box L1 at root pixels.
  {
    const auto H = random_tensor({3, 6, 7}, 200, 0, 1), Ht = random_tensor({3, 6, 7}, 201, 0, 1);
    const auto B = random_tensor({4, 6, 7}, 202, 0, 8), Bt = random_tensor({4, 6, 7}, 203, 0, 8);
    const std::vector<synth::Pixel> roots{{2, 3}, {5, 1}};
    const auto l = synth::loss_2d(H, Ht, B, Bt, roots, 0.5);
    s.loss("loss_2d_heatmaps", H, l.grad_heatmaps.vec(),
           [&](const TensorD& x) { return synth::loss_2d(x, Ht, B, Bt, roots, 0.5).value; });
    s.loss("loss_2d_box", B, l.grad_box.vec(),
           [&](const TensorD& x) { return synth::loss_2d(H, Ht, x, Bt, roots, 0.5).value; });
  }
  // Root depth L1.
  {
    const auto D = random_tensor({1, 6, 8}, 300, 2000, 8000);
    const std::vector<synth::Pixel> roots{{1, 1}, {6, 4}, {3, 5}};
    const std::vector<double> targets{4100.5, 3900.25, 7000.75};
    const auto l = ren::loss_depth(D, roots, targets);
    s.loss("loss_depth", D, l.grad.vec(), [&](const TensorD& x) { return ren::loss_depth(x, roots, targets).value; });
  }
  // Root heatmap SSE.
  {
    const auto h = random_tensor({1, 3, 4, 5}, 400, 0, 1), t = random_tensor({1, 3, 4, 5}, 401, 0, 1);
    const auto l = ren::loss_ren(h, t);
    s.loss("loss_ren", h, l.grad.vec(), [&](const TensorD& x) { return ren::loss_ren(x, t).value; });
  }
  // Pose L1 on decoded joints, softmax -> decode -> L1, and decode alone.
  {
    const GridSpec g = pen::fine_grid({0, 0, 0}, 500, 5);
    const std::vector<Vec3> target{{1.3, 2.2, 0.7}, {3.9, 0.4, 2.6}, {2.0, 2.1, 3.3}};
    const auto J = random_tensor({3, 3}, 500, 0, 4);
    auto to_joints = [](const TensorD& x) {
      std::vector<Vec3> v;
      for (std::size_t k = 0; k < x.dim(0); ++k) v.push_back({x[3 * k], x[3 * k + 1], x[3 * k + 2]});
      return v;
    };
    const auto lj = pen::loss_pen(to_joints(J), target, g);
    std::vector<double> gj;
    for (const auto& d : lj.grad) gj.insert(gj.end(), {d.x, d.y, d.z});
    s.loss("loss_pen", J, gj, [&](const TensorD& x) { return pen::loss_pen(to_joints(x), target, g).value; });

    Network<double> head({{3, 5, 5, 5}, {LayerSpec::softmax()}});
    ParamSet<double> none;
    const auto logits = random_tensor({3, 5, 5, 5}, 501, -2, 2);
    const auto tape = head.forward(none, logits);
    const auto lp = pen::loss_pen(pen::integral_decode_index(tape.output()), target, g);
    TensorD grad_logits;
    head.backward(none, tape, pen::integral_decode_backward(tape.output(), lp.grad), &grad_logits);
    s.loss("softmax_decode_l1", logits, grad_logits.vec(), [&](const TensorD& x) {
      return pen::loss_pen(pen::integral_decode_index(head.forward(none, x).output()), target, g).value;
    });

    const auto h = random_tensor({3, 4, 4, 4}, 502, 0.1, 1);
    const std::vector<Vec3> w{{0.3, -1, 2}, {1, 1, 1}, {-0.5, 0.25, 0}};
    s.loss("integral_decode", h, pen::integral_decode_backward(h, w).vec(), [&](const TensorD& x) {
      const auto d = pen::integral_decode_index(x);
      double sum = 0;
      for (int k = 0; k < 3; ++k) sum += dot(d[k], w[k]);
      return sum;
    });
  }
  return s.lines;
}

}  // namespace agrpose::pipeline
