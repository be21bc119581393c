#include <cmath>
#include <fstream>

#include "agrpose/core/adam.hpp"
#include "agrpose/core/gradcheck.hpp"
#include "agrpose/core/net.hpp"
#include "agrpose/core/tensor_io.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace agrpose;
using testutil::random_tensor;

TEST_CASE("tensor indexing is row-major") {
  TensorD t({2, 3, 4});
  t.at(1, 2, 3) = 5;
  CHECK(t[(1 * 3 + 2) * 4 + 3] == 5);
  TensorD v({2, 2, 3, 4});
  v.at(1, 0, 2, 1) = 7;
  CHECK(v[((1 * 2 + 0) * 3 + 2) * 4 + 1] == 7);
  CHECK_THROWS_AS(TensorD({2, 0}), Error);
  CHECK_THROWS_AS(t.reshape({5}), Error);
}

TEST_CASE("network rejects inconsistent layer shapes with the layer named") {
  NetSpec spec{{2, 8, 8}, {LayerSpec::conv2d(3, 4, 3, 1)}};
  try {
    Network<double> net(spec);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("L0:conv2d") != std::string::npos);
  }
}

TEST_CASE("forward shapes for 2D and 3D stacks") {
  Network<float> n2({{3, 10, 12}, {LayerSpec::conv2d(3, 5, 3, 1), LayerSpec::relu(), LayerSpec::conv2d(5, 1, 3, 0, 2)}});
  CHECK(n2.output_shape() == Shape{1, 4, 5});
  Network<float> n3({{2, 6, 7, 8}, {LayerSpec::conv3d(2, 4, 3, 2, 1, 2), LayerSpec::softmax()}});
  CHECK(n3.output_shape() == Shape{4, 6, 7, 8});
  auto params = n3.init_params(1);
  auto tape = n3.forward(params, random_tensor<float>({2, 6, 7, 8}, 3));
  const auto& out = tape.output();
  for (int c = 0; c < 4; ++c) {
    double s = 0;
    for (std::size_t i = 0; i < 6 * 7 * 8; ++i) s += out[c * 6 * 7 * 8 + i];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-5));
  }
}

TEST_CASE("conv2d with one tap and identity weight is a copy") {
  Network<double> net({{2, 3, 3}, {LayerSpec::conv2d(2, 2, 1)}});
  auto params = net.init_params(0);
  auto& w = params.at("L0.weight").value;
  w.fill(0);
  w[0] = 1;  // out0 <- in0
  w[3] = 1;  // out1 <- in1
  const auto x = random_tensor<double>({2, 3, 3}, 9);
  CHECK(net.forward(params, x).output() == x);
}

TEST_CASE("backward rejects a tape from another network") {
  Network<double> a({{1, 4, 4}, {LayerSpec::relu()}});
  Network<double> b({{1, 4, 4}, {LayerSpec::relu()}});
  auto pa = a.init_params(0);
  auto tape = b.forward(pa, random_tensor<double>({1, 4, 4}, 1));
  CHECK_THROWS_AS(a.backward(pa, tape, TensorD({1, 4, 4})), Error);
}

TEST_CASE("gradient check passes for every layer type") {
  struct Case {
    const char* name;
    NetSpec spec;
  };
  const std::vector<Case> cases = {
      {"conv2d", {{2, 6, 7}, {LayerSpec::conv2d(2, 3, 3, 1)}}},
      {"conv2d strided dilated", {{2, 9, 8}, {LayerSpec::conv2d(2, 2, 3, 2, 2, 2)}}},
      {"conv3d", {{2, 4, 5, 6}, {LayerSpec::conv3d(2, 2, 3, 1)}}},
      {"conv3d strided", {{1, 5, 5, 5}, {LayerSpec::conv3d(1, 2, 3, 0, 2)}}},
      {"relu", {{2, 5, 5}, {LayerSpec::conv2d(2, 2, 1), LayerSpec::relu()}}},
      {"sigmoid", {{2, 5, 5}, {LayerSpec::sigmoid()}}},
      {"softmax", {{3, 3, 4, 5}, {LayerSpec::softmax()}}},
      {"bias_add", {{3, 4, 4}, {LayerSpec::bias_add(3)}}},
  };
  for (const auto& c : cases) {
    CAPTURE(c.name);
    Network<double> net(c.spec);
    auto params = net.init_params(11);
    for (auto& p : params.params())
      for (auto& v : p.value.vec()) v += 0.1;  // nonzero biases
    const auto x = random_tensor<double>(c.spec.input, 5);
    const auto rep = grad_check_report(net, params, x, {});
    CHECK(rep.checked > 0);
    CHECK(rep.max_rel_error < 1e-6);
  }
}

TEST_CASE("gradient check detects a corrupted backward pass") {
  Network<double> net({{2, 5, 5}, {LayerSpec::conv2d(2, 2, 3, 1)}});
  auto params = net.init_params(2);
  GradCheckOptions opt;
  opt.corrupt = 1e-3;
  CHECK(grad_check_report(net, params, random_tensor<double>({2, 5, 5}, 1), opt).max_rel_error > 1e-6);
}

TEST_CASE("check_gradient on an analytic function") {
  auto f = [](std::span<const double> x) { return x[0] * x[0] * x[1] + std::sin(x[1]); };
  const std::vector<double> x{1.5, -0.7};
  const std::vector<double> g{2 * x[0] * x[1], x[0] * x[0] + std::cos(x[1])};
  CHECK(check_gradient(f, x, g, 1e-5).max_rel_error < 1e-8);
  const std::vector<double> wrong{g[0], g[1] + 0.01};
  CHECK(check_gradient(f, x, wrong, 1e-5).max_rel_error > 1e-3);
}

TEST_CASE("adam first step moves each weight by about lr against its gradient") {
  ParamSet<double> ps;
  auto& p = ps.add("w", "L0", TensorD({3}, std::vector<double>{1.0, -2.0, 0.5}));
  p.grad = TensorD({3}, std::vector<double>{0.3, -4.0, 0.0});
  AdamOptions opt;
  opt.lr = 0.01;
  adam_step(ps, opt);
  // m_hat = g and v_hat = g^2 after one step, so the update is lr * g / (|g| + eps).
  CHECK(p.value[0] == doctest::Approx(1.0 - 0.01 * 0.3 / (0.3 + 1e-8)).epsilon(1e-12));
  CHECK(p.value[1] == doctest::Approx(-2.0 + 0.01 * 4.0 / (4.0 + 1e-8)).epsilon(1e-12));
  CHECK(p.value[2] == 0.5);
  CHECK(ps.step() == 1);
}

TEST_CASE("adam refuses non-finite gradients without touching state") {
  ParamSet<float> ps;
  auto& p = ps.add("L3.weight", "L3:conv3d", TensorF({2}, std::vector<float>{1, 2}));
  p.grad[1] = std::nanf("");
  try {
    adam_step(ps, {});
    FAIL("expected a numerical error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numerical);
    CHECK(std::string(e.what()).find("L3.weight") != std::string::npos);
  }
  CHECK(p.value[0] == 1.0f);
  CHECK(ps.step() == 0);
}

TEST_CASE("AGRT files round-trip bit-exactly and fail loudly when damaged") {
  testutil::TempDir dir("io");
  const auto f = random_tensor<float>({3, 4, 5}, 1);
  const auto d = random_tensor<double>({7}, 2, -1e300, 1e300);
  write_tensor(dir / "f.agrt", f);
  write_tensor(dir / "d.agrt", d);
  CHECK(bitwise_equal(read_tensor<float>(dir / "f.agrt"), f));
  CHECK(bitwise_equal(read_tensor<double>(dir / "d.agrt"), d));
  CHECK_THROWS_AS(read_tensor<double>(dir / "f.agrt"), Error);

  {
    std::fstream io(dir / "f.agrt", std::ios::in | std::ios::out | std::ios::binary);
    io.seekp(1);
    io.put('X');
  }
  try {
    read_any_tensor(dir / "f.agrt");
    FAIL("expected a data error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Data);
    CHECK(std::string(e.what()).find("f.agrt") != std::string::npos);
  }

  std::filesystem::resize_file(dir / "d.agrt", std::filesystem::file_size(dir / "d.agrt") - 3);
  CHECK_THROWS_AS(read_any_tensor(dir / "d.agrt"), Error);
}
