#pragma once

#include <vector>

#include "agrpose/core/error.hpp"
#include "agrpose/core/random.hpp"
#include "agrpose/core/tensor.hpp"
#include "agrpose/geometry/camera.hpp"
#include "agrpose/synth/render.hpp"
#include "agrpose/synth/scene.hpp"
#include "json.hpp"

namespace agrpose::synth {

/// Abstract geometry representation of one scene plus its ground truth.
struct AgrSample {
  Camera camera;
  TensorF heatmaps;                  // [N, H, W] in [0,1]
  TensorF box_map;                   // [4, H, W] px distances
  std::vector<double> depth_targets; // per person, mm
  std::vector<Pixel> root_pixels;    // per person
  std::vector<Pose3D> gt_poses;      // per person, world mm
  double sigma2d = 1.5;

  int person_count() const { return int(gt_poses.size()); }
  int joint_count() const { return int(heatmaps.dim(0)); }
  int width() const { return int(heatmaps.dim(2)); }
  int height() const { return int(heatmaps.dim(1)); }
  friend bool operator==(const AgrSample&, const AgrSample&) = default;
};

/// Stage-one error model applied to clean AGR.
struct NoiseConfig {
  double heatmap_jitter_px = 0;    // Gaussian offset of every rendered peak
  Range amplitude{1, 1};           // peak amplitude scale, drawn per joint
  double false_positive_rate = 0;  // expected spurious blobs per sample (Poisson)
  double box_sigma_px = 0;         // Gaussian noise on box distances
  double depth_sigma_mm = 0;       // Gaussian noise on depth targets
  double joint_dropout = 0;        // probability a joint peak is not rendered
  friend bool operator==(const NoiseConfig&, const NoiseConfig&) = default;

  bool is_zero() const { return *this == NoiseConfig{}; }
};

void validate_noise(const NoiseConfig& n);
nlohmann::json noise_to_json(const NoiseConfig& n);

/// Returns a corrupted copy: heatmaps re-rendered with jitter, amplitude scaling,
/// dropout and spurious blobs; box distances and depth targets perturbed. Ground
/// truth (poses, root pixels, camera) is left untouched. A zero config returns
/// the input unchanged.
AgrSample corrupt_agr(const AgrSample& sample, const NoiseConfig& noise, Rng& rng);

template <class T>
struct Loss2D {
  T value = 0;
  Tensor<T> grad_heatmaps;
  Tensor<T> grad_box;
};

/// ||H - Ht||^2 + lambda * sum over root pixels of ||B(p) - Bt(p)||_1, with
/// gradients with respect to H and B.
template <class T>
Loss2D<T> loss_2d(const Tensor<T>& H, const Tensor<T>& Ht, const Tensor<T>& B, const Tensor<T>& Bt,
                  const std::vector<Pixel>& roots, T lambda) {
  if (H.dims() != Ht.dims() || B.dims() != Bt.dims() || H.rank() != 3 || B.rank() != 3 || B.dim(0) != 4 ||
      B.dim(1) != H.dim(1) || B.dim(2) != H.dim(2))
    throw data_error("loss_2d shape mismatch: H " + shape_string(H.dims()) + ", Ht " + shape_string(Ht.dims()) +
                     ", B " + shape_string(B.dims()) + ", Bt " + shape_string(Bt.dims()));
  Loss2D<T> out{T(0), Tensor<T>(H.dims()), Tensor<T>(B.dims())};
  for (std::size_t i = 0; i < H.size(); ++i) {
    const T d = H[i] - Ht[i];
    out.value += d * d;
    out.grad_heatmaps[i] = 2 * d;
  }
  const int h = int(H.dim(1)), w = int(H.dim(2));
  for (const auto& [u, v] : roots) {
    if (u < 0 || u >= w || v < 0 || v >= h)
      throw geometry_error("root pixel (" + std::to_string(u) + ", " + std::to_string(v) + ") is outside the map");
    for (int c = 0; c < 4; ++c) {
      const T d = B.at(c, v, u) - Bt.at(c, v, u);
      out.value += lambda * std::abs(d);
      out.grad_box.at(c, v, u) += lambda * T((d > 0) - (d < 0));
    }
  }
  return out;
}

}  // namespace agrpose::synth
