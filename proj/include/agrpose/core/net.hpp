#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agrpose/core/params.hpp"
#include "agrpose/core/tensor.hpp"
#include "agrpose/kernels/conv.hpp"

namespace agrpose {

enum class LayerKind { Conv2d, Conv3d, Relu, Sigmoid, SpatialSoftmax, BiasAdd };

const char* layer_kind_name(LayerKind kind);
LayerKind layer_kind_from_name(const std::string& name);

/// One layer of a sequential network. Convolutions carry their own bias unless
/// `bias` is false; `dilation` > 1 gives atrous convolutions.
struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  int in_ch = 0;
  int out_ch = 0;
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  int dilation = 1;
  bool bias = true;

  static LayerSpec conv2d(int in_ch, int out_ch, int kernel, int padding = 0, int stride = 1, int dilation = 1);
  static LayerSpec conv3d(int in_ch, int out_ch, int kernel, int padding = 0, int stride = 1, int dilation = 1);
  static LayerSpec relu() { return {LayerKind::Relu}; }
  static LayerSpec sigmoid() { return {LayerKind::Sigmoid}; }
  static LayerSpec softmax() { return {LayerKind::SpatialSoftmax}; }
  static LayerSpec bias_add(int channels);

  bool is_conv() const { return kind == LayerKind::Conv2d || kind == LayerKind::Conv3d; }
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Declared input shape plus the layer list. 2D nets take [C,H,W], 3D nets [C,Z,Y,X].
struct NetSpec {
  Shape input;
  std::vector<LayerSpec> layers;
  friend bool operator==(const NetSpec&, const NetSpec&) = default;
};

/// Intermediates of one forward pass; `backward` consumes them.
template <class T>
struct Tape {
  std::vector<Tensor<T>> activations;  // activations[i] is the input of layer i; back() is the output
  const void* owner = nullptr;

  bool valid() const { return owner != nullptr && !activations.empty(); }
  const Tensor<T>& output() const;
};

/// Sequential network with reverse-mode differentiation over its layer list.
/// Stateless: parameters live in a ParamSet, intermediates in a Tape, so one
/// Network may be shared by several threads working on disjoint ParamSets.
template <class T>
class Network {
 public:
  explicit Network(NetSpec spec);

  const NetSpec& spec() const { return spec_; }
  const Shape& output_shape() const { return shapes_.back(); }
  const Shape& layer_input_shape(std::size_t i) const { return shapes_.at(i); }

  /// Fresh parameters: conv weights uniform in +-sqrt(6/fan_in), biases zero.
  ParamSet<T> init_params(std::uint64_t seed) const;

  /// Throws a data error if `params` does not carry every tensor this net needs.
  void check_params(const ParamSet<T>& params) const;

  Tape<T> forward(const ParamSet<T>& params, const Tensor<T>& input) const;

  /// Accumulates parameter gradients into `params`. When `grad_input` is
  /// non-null it receives d(loss)/d(input).
  void backward(ParamSet<T>& params, const Tape<T>& tape, const Tensor<T>& grad_output,
                Tensor<T>* grad_input = nullptr) const;

 private:
  kernels::ConvGeometry conv_geometry_for(std::size_t layer) const;

  NetSpec spec_;
  std::vector<Shape> shapes_;  // shapes_[i] = input of layer i, shapes_.back() = output
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace agrpose
