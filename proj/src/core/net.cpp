#include "agrpose/core/net.hpp"

#include <cmath>
#include <sstream>

#include "agrpose/core/random.hpp"

namespace agrpose {

std::string shape_string(const Shape& dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "," : "") << dims[i];
  os << ']';
  return os.str();
}

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::Conv3d: return "conv3d";
    case LayerKind::Relu: return "relu";
    case LayerKind::Sigmoid: return "sigmoid";
    case LayerKind::SpatialSoftmax: return "softmax";
    case LayerKind::BiasAdd: return "bias_add";
  }
  return "?";
}

LayerKind layer_kind_from_name(const std::string& name) {
  for (auto k : {LayerKind::Conv2d, LayerKind::Conv3d, LayerKind::Relu, LayerKind::Sigmoid,
                 LayerKind::SpatialSoftmax, LayerKind::BiasAdd})
    if (name == layer_kind_name(k)) return k;
  throw config_error("unknown layer kind '" + name + "'");
}

LayerSpec LayerSpec::conv2d(int in_ch, int out_ch, int kernel, int padding, int stride, int dilation) {
  return {LayerKind::Conv2d, in_ch, out_ch, kernel, stride, padding, dilation, true};
}
LayerSpec LayerSpec::conv3d(int in_ch, int out_ch, int kernel, int padding, int stride, int dilation) {
  return {LayerKind::Conv3d, in_ch, out_ch, kernel, stride, padding, dilation, true};
}
LayerSpec LayerSpec::bias_add(int channels) {
  LayerSpec s{LayerKind::BiasAdd};
  s.in_ch = s.out_ch = channels;
  return s;
}

template <class T>
const Tensor<T>& Tape<T>::output() const {
  if (activations.empty()) throw data_error("tape holds no forward pass");
  return activations.back();
}

namespace {

std::string layer_tag(std::size_t i, const LayerSpec& l) {
  return "L" + std::to_string(i) + ":" + layer_kind_name(l.kind);
}

// Views any activation as [C, Z, Y, X].
std::array<std::size_t, 4> as_volume(const Shape& s) {
  if (s.size() == 3) return {s[0], 1, s[1], s[2]};
  if (s.size() == 4) return {s[0], s[1], s[2], s[3]};
  return {s.empty() ? 0 : s[0], 1, 1, s.size() > 1 ? shape_size(s) / s[0] : 1};
}

}  // namespace

template <class T>
Network<T>::Network(NetSpec spec) : spec_(std::move(spec)) {
  if (spec_.input.empty()) throw data_error("network input shape is empty");
  shapes_.push_back(spec_.input);
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto& l = spec_.layers[i];
    const Shape& in = shapes_.back();
    const std::string tag = layer_tag(i, l);
    Shape out = in;
    if (l.is_conv()) {
      const std::size_t rank = l.kind == LayerKind::Conv2d ? 3 : 4;
      if (in.size() != rank)
        throw data_error(tag + ": expects rank-" + std::to_string(rank) + " input, got " + shape_string(in));
      if (int(in[0]) != l.in_ch)
        throw data_error(tag + ": declares " + std::to_string(l.in_ch) + " input channels but receives " +
                         std::to_string(in[0]));
      if (l.out_ch <= 0 || l.kernel <= 0 || l.stride <= 0 || l.dilation <= 0 || l.padding < 0)
        throw data_error(tag + ": invalid channel/kernel/stride/dilation/padding");
      const auto g = conv_geometry_for(i);
      if (!g.valid()) throw data_error(tag + ": output spatial size not positive for input " + shape_string(in));
      const auto o = g.out();
      out = rank == 3 ? Shape{std::size_t(l.out_ch), std::size_t(o[1]), std::size_t(o[2])}
                      : Shape{std::size_t(l.out_ch), std::size_t(o[0]), std::size_t(o[1]), std::size_t(o[2])};
    } else if (l.kind == LayerKind::BiasAdd) {
      if (int(in[0]) != l.in_ch)
        throw data_error(tag + ": declares " + std::to_string(l.in_ch) + " channels but receives " +
                         std::to_string(in[0]));
    }
    shapes_.push_back(out);
  }
}

template <class T>
kernels::ConvGeometry Network<T>::conv_geometry_for(std::size_t i) const {
  const auto& l = spec_.layers[i];
  const auto v = as_volume(shapes_.at(i));
  kernels::ConvGeometry g;
  g.in_ch = int(v[0]);
  g.out_ch = l.out_ch;
  g.in = {int(v[1]), int(v[2]), int(v[3])};
  const bool is3d = l.kind == LayerKind::Conv3d;
  g.kernel = {is3d ? l.kernel : 1, l.kernel, l.kernel};
  g.stride = {is3d ? l.stride : 1, l.stride, l.stride};
  g.pad = {is3d ? l.padding : 0, l.padding, l.padding};
  g.dilation = {is3d ? l.dilation : 1, l.dilation, l.dilation};
  return g;
}

template <class T>
ParamSet<T> Network<T>::init_params(std::uint64_t seed) const {
  ParamSet<T> ps;
  Rng rng(seed);
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto& l = spec_.layers[i];
    const std::string tag = layer_tag(i, l);
    const std::string prefix = "L" + std::to_string(i);
    if (l.is_conv()) {
      const auto g = conv_geometry_for(i);
      const double fan_in = double(g.in_ch) * double(g.kernel_volume());
      const double bound = std::sqrt(6.0 / fan_in);
      std::uniform_real_distribution<double> dist(-bound, bound);
      Tensor<T> w(Shape{std::size_t(g.out_ch), std::size_t(g.in_ch), std::size_t(g.kernel[0]),
                        std::size_t(g.kernel[1]), std::size_t(g.kernel[2])});
      for (auto& x : w.vec()) x = T(dist(rng));
      ps.add(prefix + ".weight", tag, std::move(w));
      if (l.bias) ps.add(prefix + ".bias", tag, Tensor<T>(Shape{std::size_t(g.out_ch)}));
    } else if (l.kind == LayerKind::BiasAdd) {
      ps.add(prefix + ".bias", tag, Tensor<T>(Shape{std::size_t(l.in_ch)}));
    }
  }
  return ps;
}

template <class T>
void Network<T>::check_params(const ParamSet<T>& params) const {
  auto expect = [&](const std::string& name, const Shape& dims) {
    const auto* p = params.find(name);
    if (!p) throw data_error("parameter set lacks '" + name + "'");
    if (p->value.dims() != dims)
      throw data_error("parameter '" + name + "' has shape " + shape_string(p->value.dims()) + ", expected " +
                       shape_string(dims));
  };
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto& l = spec_.layers[i];
    const std::string prefix = "L" + std::to_string(i);
    if (l.is_conv()) {
      const auto g = conv_geometry_for(i);
      expect(prefix + ".weight", {std::size_t(g.out_ch), std::size_t(g.in_ch), std::size_t(g.kernel[0]),
                                  std::size_t(g.kernel[1]), std::size_t(g.kernel[2])});
      if (l.bias) expect(prefix + ".bias", {std::size_t(g.out_ch)});
    } else if (l.kind == LayerKind::BiasAdd) {
      expect(prefix + ".bias", {std::size_t(l.in_ch)});
    }
  }
}

template <class T>
Tape<T> Network<T>::forward(const ParamSet<T>& params, const Tensor<T>& input) const {
  if (input.dims() != spec_.input)
    throw data_error("L0:" + std::string(spec_.layers.empty() ? "input" : layer_kind_name(spec_.layers[0].kind)) +
                     ": input shape " + shape_string(input.dims()) + " does not match declared " +
                     shape_string(spec_.input));
  Tape<T> tape;
  tape.owner = this;
  tape.activations.reserve(spec_.layers.size() + 1);
  tape.activations.push_back(input);
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto& l = spec_.layers[i];
    const Tensor<T>& x = tape.activations.back();
    Tensor<T> y(shapes_[i + 1]);
    const std::string prefix = "L" + std::to_string(i);
    switch (l.kind) {
      case LayerKind::Conv2d:
      case LayerKind::Conv3d: {
        const auto& w = params.at(prefix + ".weight").value;
        const T* b = l.bias ? params.at(prefix + ".bias").value.data() : nullptr;
        kernels::conv_forward(conv_geometry_for(i), x.data(), w.data(), b, y.data());
        break;
      }
      case LayerKind::Relu:
        for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[k] > T(0) ? x[k] : T(0);
        break;
      case LayerKind::Sigmoid:
        for (std::size_t k = 0; k < x.size(); ++k) y[k] = T(1) / (T(1) + std::exp(-x[k]));
        break;
      case LayerKind::SpatialSoftmax: {
        const std::size_t C = x.dim(0), per = x.size() / C;
        for (std::size_t c = 0; c < C; ++c) {
          const T* xi = x.data() + c * per;
          T* yi = y.data() + c * per;
          T mx = xi[0];
          for (std::size_t k = 1; k < per; ++k) mx = std::max(mx, xi[k]);
          T sum = T(0);
          for (std::size_t k = 0; k < per; ++k) {
            yi[k] = std::exp(xi[k] - mx);
            sum += yi[k];
          }
          const T inv = T(1) / sum;
          for (std::size_t k = 0; k < per; ++k) yi[k] *= inv;
        }
        break;
      }
      case LayerKind::BiasAdd: {
        const auto& b = params.at(prefix + ".bias").value;
        const std::size_t C = x.dim(0), per = x.size() / C;
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t k = 0; k < per; ++k) y[c * per + k] = x[c * per + k] + b[c];
        break;
      }
    }
    tape.activations.push_back(std::move(y));
  }
  return tape;
}

template <class T>
void Network<T>::backward(ParamSet<T>& params, const Tape<T>& tape, const Tensor<T>& grad_output,
                          Tensor<T>* grad_input) const {
  if (!tape.valid() || tape.owner != this || tape.activations.size() != spec_.layers.size() + 1)
    throw data_error("backward called without a matching forward pass");
  if (grad_output.dims() != shapes_.back())
    throw data_error("loss gradient shape " + shape_string(grad_output.dims()) + " does not match output " +
                     shape_string(shapes_.back()));
  Tensor<T> g = grad_output;
  for (std::size_t ii = spec_.layers.size(); ii-- > 0;) {
    const auto& l = spec_.layers[ii];
    const Tensor<T>& x = tape.activations[ii];
    const Tensor<T>& y = tape.activations[ii + 1];
    const std::string prefix = "L" + std::to_string(ii);
    const bool need_input_grad = ii > 0 || grad_input != nullptr;
    Tensor<T> gx;
    switch (l.kind) {
      case LayerKind::Conv2d:
      case LayerKind::Conv3d: {
        const auto geo = conv_geometry_for(ii);
        auto& w = params.at(prefix + ".weight");
        T* gb = l.bias ? params.at(prefix + ".bias").grad.data() : nullptr;
        kernels::conv_backward_weight(geo, x.data(), g.data(), w.grad.data(), gb);
        if (need_input_grad) {
          gx = Tensor<T>(x.dims());
          kernels::conv_backward_input(geo, g.data(), w.value.data(), gx.data());
        }
        break;
      }
      case LayerKind::Relu:
        gx = Tensor<T>(x.dims());
        for (std::size_t k = 0; k < x.size(); ++k) gx[k] = x[k] > T(0) ? g[k] : T(0);
        break;
      case LayerKind::Sigmoid:
        gx = Tensor<T>(x.dims());
        for (std::size_t k = 0; k < x.size(); ++k) gx[k] = g[k] * y[k] * (T(1) - y[k]);
        break;
      case LayerKind::SpatialSoftmax: {
        gx = Tensor<T>(x.dims());
        const std::size_t C = x.dim(0), per = x.size() / C;
        for (std::size_t c = 0; c < C; ++c) {
          const T* yi = y.data() + c * per;
          const T* gi = g.data() + c * per;
          T dot = T(0);
          for (std::size_t k = 0; k < per; ++k) dot += gi[k] * yi[k];
          T* out = gx.data() + c * per;
          for (std::size_t k = 0; k < per; ++k) out[k] = yi[k] * (gi[k] - dot);
        }
        break;
      }
      case LayerKind::BiasAdd: {
        auto& b = params.at(prefix + ".bias");
        const std::size_t C = x.dim(0), per = x.size() / C;
        for (std::size_t c = 0; c < C; ++c) {
          T s = T(0);
          for (std::size_t k = 0; k < per; ++k) s += g[c * per + k];
          b.grad[c] += s;
        }
        gx = g;
        break;
      }
    }
    if (!need_input_grad) break;
    g = std::move(gx);
  }
  if (grad_input) *grad_input = std::move(g);
}

template struct Tape<float>;
template struct Tape<double>;
template class Network<float>;
template class Network<double>;

}  // namespace agrpose
