#pragma once

#include <array>
#include <cstddef>

namespace agrpose::kernels {

/// Shape of one N-d (2D or 3D) convolution. 2D convolutions use a depth of 1
/// with a 1-tap kernel on the z axis. Axis order everywhere is (z, y, x).
///
/// Layouts (row-major):
///   input   [in_ch][in.z][in.y][in.x]
///   weight  [out_ch][in_ch][kernel.z][kernel.y][kernel.x]
///   output  [out_ch][out.z][out.y][out.x]
struct ConvGeometry {
  int in_ch = 1;
  int out_ch = 1;
  std::array<int, 3> in{1, 1, 1};
  std::array<int, 3> kernel{1, 1, 1};
  std::array<int, 3> stride{1, 1, 1};
  std::array<int, 3> pad{0, 0, 0};
  std::array<int, 3> dilation{1, 1, 1};

  /// Output extent per axis; non-positive values mean the geometry is invalid.
  std::array<int, 3> out() const {
    std::array<int, 3> o{};
    for (int a = 0; a < 3; ++a)
      o[a] = (in[a] + 2 * pad[a] - dilation[a] * (kernel[a] - 1) - 1) / stride[a] + 1;
    return o;
  }
  bool valid() const {
    auto o = out();
    for (int a = 0; a < 3; ++a)
      if (o[a] <= 0 || in[a] + 2 * pad[a] - dilation[a] * (kernel[a] - 1) - 1 < 0) return false;
    return in_ch > 0 && out_ch > 0;
  }
  std::size_t in_size() const { return std::size_t(in_ch) * in[0] * in[1] * in[2]; }
  std::size_t out_size() const {
    auto o = out();
    return std::size_t(out_ch) * o[0] * o[1] * o[2];
  }
  std::size_t kernel_volume() const { return std::size_t(kernel[0]) * kernel[1] * kernel[2]; }
  std::size_t weight_size() const { return std::size_t(out_ch) * in_ch * kernel_volume(); }
  bool unit_stride() const { return stride[0] == 1 && stride[1] == 1 && stride[2] == 1; }
};

// OpenMP-parallel kernels. Every output element is produced by exactly one
// thread with a fixed summation order, so results do not depend on the thread
// count.

/// out = conv(in, weight) + bias. `bias` may be null.
template <class T>
void conv_forward(const ConvGeometry& g, const T* in, const T* weight, const T* bias, T* out);

/// grad_in = conv_transpose(grad_out, weight). Overwrites grad_in.
template <class T>
void conv_backward_input(const ConvGeometry& g, const T* grad_out, const T* weight, T* grad_in);

/// grad_weight += correlate(in, grad_out); grad_bias += sum(grad_out). `grad_bias` may be null.
template <class T>
void conv_backward_weight(const ConvGeometry& g, const T* in, const T* grad_out, T* grad_weight, T* grad_bias);

namespace reference {

// Serial direct-summation versions. Kept for testing and benchmarking the
// parallel kernels; they share no code with them.

template <class T>
void conv_forward(const ConvGeometry& g, const T* in, const T* weight, const T* bias, T* out);
template <class T>
void conv_backward_input(const ConvGeometry& g, const T* grad_out, const T* weight, T* grad_in);
template <class T>
void conv_backward_weight(const ConvGeometry& g, const T* in, const T* grad_out, T* grad_weight, T* grad_bias);

}  // namespace reference

}  // namespace agrpose::kernels
