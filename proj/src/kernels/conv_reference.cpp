#include <algorithm>

#include "agrpose/kernels/conv.hpp"

namespace agrpose::kernels::reference {
namespace {

struct Index {
  const ConvGeometry& g;
  std::array<int, 3> o;
  std::size_t in(int c, int z, int y, int x) const {
    return ((std::size_t(c) * g.in[0] + z) * g.in[1] + y) * g.in[2] + x;
  }
  std::size_t out(int c, int z, int y, int x) const { return ((std::size_t(c) * o[0] + z) * o[1] + y) * o[2] + x; }
  std::size_t w(int co, int ci, int kz, int ky, int kx) const {
    return (((std::size_t(co) * g.in_ch + ci) * g.kernel[0] + kz) * g.kernel[1] + ky) * g.kernel[2] + kx;
  }
  // Input coordinate touched by output position `o_` and kernel tap `k` on axis `a`; -1 if in padding.
  int tap(int a, int o_, int k) const {
    const int i = o_ * g.stride[a] + k * g.dilation[a] - g.pad[a];
    return (i < 0 || i >= g.in[a]) ? -1 : i;
  }
};

}  // namespace

template <class T>
void conv_forward(const ConvGeometry& g, const T* in, const T* weight, const T* bias, T* out) {
  const Index ix{g, g.out()};
  for (int co = 0; co < g.out_ch; ++co)
    for (int z = 0; z < ix.o[0]; ++z)
      for (int y = 0; y < ix.o[1]; ++y)
        for (int x = 0; x < ix.o[2]; ++x) {
          T s = bias ? bias[co] : T(0);
          for (int ci = 0; ci < g.in_ch; ++ci)
            for (int kz = 0; kz < g.kernel[0]; ++kz)
              for (int ky = 0; ky < g.kernel[1]; ++ky)
                for (int kx = 0; kx < g.kernel[2]; ++kx) {
                  const int zi = ix.tap(0, z, kz), yi = ix.tap(1, y, ky), xi = ix.tap(2, x, kx);
                  if (zi < 0 || yi < 0 || xi < 0) continue;
                  s += weight[ix.w(co, ci, kz, ky, kx)] * in[ix.in(ci, zi, yi, xi)];
                }
          out[ix.out(co, z, y, x)] = s;
        }
}

template <class T>
void conv_backward_input(const ConvGeometry& g, const T* grad_out, const T* weight, T* grad_in) {
  const Index ix{g, g.out()};
  std::fill(grad_in, grad_in + g.in_size(), T(0));
  for (int co = 0; co < g.out_ch; ++co)
    for (int z = 0; z < ix.o[0]; ++z)
      for (int y = 0; y < ix.o[1]; ++y)
        for (int x = 0; x < ix.o[2]; ++x)
          for (int ci = 0; ci < g.in_ch; ++ci)
            for (int kz = 0; kz < g.kernel[0]; ++kz)
              for (int ky = 0; ky < g.kernel[1]; ++ky)
                for (int kx = 0; kx < g.kernel[2]; ++kx) {
                  const int zi = ix.tap(0, z, kz), yi = ix.tap(1, y, ky), xi = ix.tap(2, x, kx);
                  if (zi < 0 || yi < 0 || xi < 0) continue;
                  grad_in[ix.in(ci, zi, yi, xi)] += weight[ix.w(co, ci, kz, ky, kx)] * grad_out[ix.out(co, z, y, x)];
                }
}

template <class T>
void conv_backward_weight(const ConvGeometry& g, const T* in, const T* grad_out, T* grad_weight, T* grad_bias) {
  const Index ix{g, g.out()};
  for (int co = 0; co < g.out_ch; ++co)
    for (int z = 0; z < ix.o[0]; ++z)
      for (int y = 0; y < ix.o[1]; ++y)
        for (int x = 0; x < ix.o[2]; ++x) {
          const T go = grad_out[ix.out(co, z, y, x)];
          if (grad_bias) grad_bias[co] += go;
          for (int ci = 0; ci < g.in_ch; ++ci)
            for (int kz = 0; kz < g.kernel[0]; ++kz)
              for (int ky = 0; ky < g.kernel[1]; ++ky)
                for (int kx = 0; kx < g.kernel[2]; ++kx) {
                  const int zi = ix.tap(0, z, kz), yi = ix.tap(1, y, ky), xi = ix.tap(2, x, kx);
                  if (zi < 0 || yi < 0 || xi < 0) continue;
                  grad_weight[ix.w(co, ci, kz, ky, kx)] += go * in[ix.in(ci, zi, yi, xi)];
                }
        }
}

template void conv_forward<float>(const ConvGeometry&, const float*, const float*, const float*, float*);
template void conv_forward<double>(const ConvGeometry&, const double*, const double*, const double*, double*);
template void conv_backward_input<float>(const ConvGeometry&, const float*, const float*, float*);
template void conv_backward_input<double>(const ConvGeometry&, const double*, const double*, double*);
template void conv_backward_weight<float>(const ConvGeometry&, const float*, const float*, float*, float*);
template void conv_backward_weight<double>(const ConvGeometry&, const double*, const double*, double*, double*);

}  // namespace agrpose::kernels::reference
