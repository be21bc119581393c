#include "agrpose/kernels/conv.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

namespace agrpose::kernels {
namespace {

// Half-open range of output positions o with 0 <= o + off < in_extent.
inline void shifted_range(int out_extent, int in_extent, int off, int& lo, int& hi) {
  lo = std::max(0, -off);
  hi = std::min(out_extent, in_extent - off);
}

template <class T>
void forward_unit_stride(const ConvGeometry& g, const T* in, const T* weight, const T* bias, T* out) {
  const auto o = g.out();
  const int OZ = o[0], OY = o[1], OX = o[2];
  const int IZ = g.in[0], IY = g.in[1], IX = g.in[2];
  const int KZ = g.kernel[0], KY = g.kernel[1], KX = g.kernel[2];
  const std::size_t oplane = std::size_t(OY) * OX, iplane = std::size_t(IY) * IX;

#pragma omp parallel for collapse(2) schedule(static)
  for (int co = 0; co < g.out_ch; ++co) {
    for (int zo = 0; zo < OZ; ++zo) {
      T* op = out + (std::size_t(co) * OZ + zo) * oplane;
      const T b = bias ? bias[co] : T(0);
      std::fill(op, op + oplane, b);
      for (int ci = 0; ci < g.in_ch; ++ci) {
        const T* wc = weight + (std::size_t(co) * g.in_ch + ci) * g.kernel_volume();
        for (int kz = 0; kz < KZ; ++kz) {
          const int zi = zo + kz * g.dilation[0] - g.pad[0];
          if (zi < 0 || zi >= IZ) continue;
          const T* ip = in + (std::size_t(ci) * IZ + zi) * iplane;
          for (int ky = 0; ky < KY; ++ky) {
            const int offy = ky * g.dilation[1] - g.pad[1];
            int y0, y1;
            shifted_range(OY, IY, offy, y0, y1);
            for (int kx = 0; kx < KX; ++kx) {
              const int offx = kx * g.dilation[2] - g.pad[2];
              int x0, x1;
              shifted_range(OX, IX, offx, x0, x1);
              const T w = wc[(kz * KY + ky) * KX + kx];
              if (w == T(0)) continue;
              for (int yo = y0; yo < y1; ++yo) {
                T* orow = op + std::size_t(yo) * OX;
                const T* irow = ip + std::size_t(yo + offy) * IX + offx;
#pragma omp simd
                for (int xo = x0; xo < x1; ++xo) orow[xo] += w * irow[xo];
              }
            }
          }
        }
      }
    }
  }
}

template <class T>
void backward_input_unit_stride(const ConvGeometry& g, const T* grad_out, const T* weight, T* grad_in) {
  const auto o = g.out();
  const int OZ = o[0], OY = o[1], OX = o[2];
  const int IZ = g.in[0], IY = g.in[1], IX = g.in[2];
  const int KZ = g.kernel[0], KY = g.kernel[1], KX = g.kernel[2];
  const std::size_t oplane = std::size_t(OY) * OX, iplane = std::size_t(IY) * IX;

#pragma omp parallel for collapse(2) schedule(static)
  for (int ci = 0; ci < g.in_ch; ++ci) {
    for (int zi = 0; zi < IZ; ++zi) {
      T* ip = grad_in + (std::size_t(ci) * IZ + zi) * iplane;
      std::fill(ip, ip + iplane, T(0));
      for (int co = 0; co < g.out_ch; ++co) {
        const T* wc = weight + (std::size_t(co) * g.in_ch + ci) * g.kernel_volume();
        for (int kz = 0; kz < KZ; ++kz) {
          const int zo = zi - (kz * g.dilation[0] - g.pad[0]);
          if (zo < 0 || zo >= OZ) continue;
          const T* op = grad_out + (std::size_t(co) * OZ + zo) * oplane;
          for (int ky = 0; ky < KY; ++ky) {
            const int offy = ky * g.dilation[1] - g.pad[1];
            // yi = yo + offy, valid for yo in [0, OY) and yi in [0, IY)
            const int yi0 = std::max(0, offy), yi1 = std::min(IY, OY + offy);
            for (int kx = 0; kx < KX; ++kx) {
              const int offx = kx * g.dilation[2] - g.pad[2];
              const int xi0 = std::max(0, offx), xi1 = std::min(IX, OX + offx);
              const T w = wc[(kz * KY + ky) * KX + kx];
              if (w == T(0)) continue;
              for (int yi = yi0; yi < yi1; ++yi) {
                T* irow = ip + std::size_t(yi) * IX;
                const T* orow = op + std::size_t(yi - offy) * OX;
#pragma omp simd
                for (int xi = xi0; xi < xi1; ++xi) irow[xi] += w * orow[xi - offx];
              }
            }
          }
        }
      }
    }
  }
}

template <class T>
void backward_weight_unit_stride(const ConvGeometry& g, const T* in, const T* grad_out, T* grad_weight) {
  const auto o = g.out();
  const int OZ = o[0], OY = o[1], OX = o[2];
  const int IZ = g.in[0], IY = g.in[1], IX = g.in[2];
  const int KZ = g.kernel[0], KY = g.kernel[1], KX = g.kernel[2];
  const std::size_t oplane = std::size_t(OY) * OX, iplane = std::size_t(IY) * IX;
  const std::size_t kvol = g.kernel_volume();

#pragma omp parallel for collapse(2) schedule(static)
  for (int co = 0; co < g.out_ch; ++co) {
    for (int ci = 0; ci < g.in_ch; ++ci) {
      // Per-tap row accumulators; reduced to a scalar once at the end.
      std::vector<T> acc(kvol * std::size_t(OX), T(0));
      for (int zo = 0; zo < OZ; ++zo) {
        const T* op = grad_out + (std::size_t(co) * OZ + zo) * oplane;
        for (int kz = 0; kz < KZ; ++kz) {
          const int zi = zo + kz * g.dilation[0] - g.pad[0];
          if (zi < 0 || zi >= IZ) continue;
          const T* ip = in + (std::size_t(ci) * IZ + zi) * iplane;
          for (int ky = 0; ky < KY; ++ky) {
            const int offy = ky * g.dilation[1] - g.pad[1];
            int y0, y1;
            shifted_range(OY, IY, offy, y0, y1);
            for (int kx = 0; kx < KX; ++kx) {
              const int offx = kx * g.dilation[2] - g.pad[2];
              int x0, x1;
              shifted_range(OX, IX, offx, x0, x1);
              T* a = acc.data() + std::size_t((kz * KY + ky) * KX + kx) * OX;
              for (int yo = y0; yo < y1; ++yo) {
                const T* orow = op + std::size_t(yo) * OX;
                const T* irow = ip + std::size_t(yo + offy) * IX + offx;
#pragma omp simd
                for (int xo = x0; xo < x1; ++xo) a[xo] += orow[xo] * irow[xo];
              }
            }
          }
        }
      }
      T* gw = grad_weight + (std::size_t(co) * g.in_ch + ci) * kvol;
      for (std::size_t k = 0; k < kvol; ++k) {
        T s = T(0);
        for (int x = 0; x < OX; ++x) s += acc[k * OX + x];
        gw[k] += s;
      }
    }
  }
}

// Generic strided paths: one output element at a time.
template <class T>
void forward_strided(const ConvGeometry& g, const T* in, const T* weight, const T* bias, T* out) {
  const auto o = g.out();
#pragma omp parallel for collapse(2) schedule(static)
  for (int co = 0; co < g.out_ch; ++co)
    for (int zo = 0; zo < o[0]; ++zo)
      for (int yo = 0; yo < o[1]; ++yo)
        for (int xo = 0; xo < o[2]; ++xo) {
          T s = bias ? bias[co] : T(0);
          for (int ci = 0; ci < g.in_ch; ++ci)
            for (int kz = 0; kz < g.kernel[0]; ++kz) {
              const int zi = zo * g.stride[0] + kz * g.dilation[0] - g.pad[0];
              if (zi < 0 || zi >= g.in[0]) continue;
              for (int ky = 0; ky < g.kernel[1]; ++ky) {
                const int yi = yo * g.stride[1] + ky * g.dilation[1] - g.pad[1];
                if (yi < 0 || yi >= g.in[1]) continue;
                for (int kx = 0; kx < g.kernel[2]; ++kx) {
                  const int xi = xo * g.stride[2] + kx * g.dilation[2] - g.pad[2];
                  if (xi < 0 || xi >= g.in[2]) continue;
                  s += weight[((std::size_t(co) * g.in_ch + ci) * g.kernel[0] + kz) * g.kernel[1] * g.kernel[2] +
                              ky * g.kernel[2] + kx] *
                       in[((std::size_t(ci) * g.in[0] + zi) * g.in[1] + yi) * g.in[2] + xi];
                }
              }
            }
          out[((std::size_t(co) * o[0] + zo) * o[1] + yo) * o[2] + xo] = s;
        }
}

template <class T>
void backward_input_strided(const ConvGeometry& g, const T* grad_out, const T* weight, T* grad_in) {
  const auto o = g.out();
  // Parallel over input channels: each thread owns a disjoint slice of grad_in.
#pragma omp parallel for schedule(static)
  for (int ci = 0; ci < g.in_ch; ++ci) {
    T* gi = grad_in + std::size_t(ci) * g.in[0] * g.in[1] * g.in[2];
    std::fill(gi, gi + std::size_t(g.in[0]) * g.in[1] * g.in[2], T(0));
    for (int co = 0; co < g.out_ch; ++co)
      for (int zo = 0; zo < o[0]; ++zo)
        for (int yo = 0; yo < o[1]; ++yo)
          for (int xo = 0; xo < o[2]; ++xo) {
            const T go = grad_out[((std::size_t(co) * o[0] + zo) * o[1] + yo) * o[2] + xo];
            for (int kz = 0; kz < g.kernel[0]; ++kz) {
              const int zi = zo * g.stride[0] + kz * g.dilation[0] - g.pad[0];
              if (zi < 0 || zi >= g.in[0]) continue;
              for (int ky = 0; ky < g.kernel[1]; ++ky) {
                const int yi = yo * g.stride[1] + ky * g.dilation[1] - g.pad[1];
                if (yi < 0 || yi >= g.in[1]) continue;
                for (int kx = 0; kx < g.kernel[2]; ++kx) {
                  const int xi = xo * g.stride[2] + kx * g.dilation[2] - g.pad[2];
                  if (xi < 0 || xi >= g.in[2]) continue;
                  gi[(std::size_t(zi) * g.in[1] + yi) * g.in[2] + xi] +=
                      go * weight[((std::size_t(co) * g.in_ch + ci) * g.kernel[0] + kz) * g.kernel[1] * g.kernel[2] +
                                  ky * g.kernel[2] + kx];
                }
              }
            }
          }
  }
}

template <class T>
void backward_weight_strided(const ConvGeometry& g, const T* in, const T* grad_out, T* grad_weight) {
  const auto o = g.out();
#pragma omp parallel for collapse(2) schedule(static)
  for (int co = 0; co < g.out_ch; ++co)
    for (int ci = 0; ci < g.in_ch; ++ci)
      for (int kz = 0; kz < g.kernel[0]; ++kz)
        for (int ky = 0; ky < g.kernel[1]; ++ky)
          for (int kx = 0; kx < g.kernel[2]; ++kx) {
            T s = T(0);
            for (int zo = 0; zo < o[0]; ++zo) {
              const int zi = zo * g.stride[0] + kz * g.dilation[0] - g.pad[0];
              if (zi < 0 || zi >= g.in[0]) continue;
              for (int yo = 0; yo < o[1]; ++yo) {
                const int yi = yo * g.stride[1] + ky * g.dilation[1] - g.pad[1];
                if (yi < 0 || yi >= g.in[1]) continue;
                for (int xo = 0; xo < o[2]; ++xo) {
                  const int xi = xo * g.stride[2] + kx * g.dilation[2] - g.pad[2];
                  if (xi < 0 || xi >= g.in[2]) continue;
                  s += grad_out[((std::size_t(co) * o[0] + zo) * o[1] + yo) * o[2] + xo] *
                       in[((std::size_t(ci) * g.in[0] + zi) * g.in[1] + yi) * g.in[2] + xi];
                }
              }
            }
            grad_weight[((std::size_t(co) * g.in_ch + ci) * g.kernel[0] + kz) * g.kernel[1] * g.kernel[2] +
                        ky * g.kernel[2] + kx] += s;
          }
}

template <class T>
void bias_gradient(const ConvGeometry& g, const T* grad_out, T* grad_bias) {
  const auto o = g.out();
  const std::size_t per = std::size_t(o[0]) * o[1] * o[2];
#pragma omp parallel for schedule(static)
  for (int co = 0; co < g.out_ch; ++co) {
    T s = T(0);
    const T* p = grad_out + std::size_t(co) * per;
    for (std::size_t i = 0; i < per; ++i) s += p[i];
    grad_bias[co] += s;
  }
}

}  // namespace

template <class T>
void conv_forward(const ConvGeometry& g, const T* in, const T* weight, const T* bias, T* out) {
  if (g.unit_stride())
    forward_unit_stride(g, in, weight, bias, out);
  else
    forward_strided(g, in, weight, bias, out);
}

template <class T>
void conv_backward_input(const ConvGeometry& g, const T* grad_out, const T* weight, T* grad_in) {
  if (g.unit_stride())
    backward_input_unit_stride(g, grad_out, weight, grad_in);
  else
    backward_input_strided(g, grad_out, weight, grad_in);
}

template <class T>
void conv_backward_weight(const ConvGeometry& g, const T* in, const T* grad_out, T* grad_weight, T* grad_bias) {
  if (g.unit_stride())
    backward_weight_unit_stride(g, in, grad_out, grad_weight);
  else
    backward_weight_strided(g, in, grad_out, grad_weight);
  if (grad_bias) bias_gradient(g, grad_out, grad_bias);
}

template void conv_forward<float>(const ConvGeometry&, const float*, const float*, const float*, float*);
template void conv_forward<double>(const ConvGeometry&, const double*, const double*, const double*, double*);
template void conv_backward_input<float>(const ConvGeometry&, const float*, const float*, float*);
template void conv_backward_input<double>(const ConvGeometry&, const double*, const double*, double*);
template void conv_backward_weight<float>(const ConvGeometry&, const float*, const float*, float*, float*);
template void conv_backward_weight<double>(const ConvGeometry&, const double*, const double*, double*, double*);

}  // namespace agrpose::kernels
