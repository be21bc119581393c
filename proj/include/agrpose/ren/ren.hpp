#pragma once

#include <cmath>
#include <filesystem>
#include <vector>

#include "agrpose/core/net.hpp"
#include "agrpose/core/tensor.hpp"
#include "agrpose/geometry/camera.hpp"
#include "agrpose/geometry/grid.hpp"
#include "agrpose/synth/agr.hpp"
#include "agrpose/synth/render.hpp"

namespace agrpose::ren {

using synth::Box;
using synth::Pixel;

struct PersonDetection {
  double u = 0, v = 0;  // root pixel
  Box box;              // absolute box in pixel coordinates
  double depth = 0;     // mm
  double confidence = 0;
};

// ---------------------------------------------------------------- depth map

/// Affine range for the depth estimator's sigmoid output.
///
/// With ref_focal > 0 the range is the depth seen by a camera of that focal
/// length: the net predicts depth / focal, which heatmaps alone can determine,
/// and the camera's own focal converts it back to mm.
struct DepthRange {
  double min = 1500, max = 10500;
  double ref_focal = 0;  // px; 0 = raw depth
  double mid() const { return 0.5 * (min + max); }
  double scale(const Camera& cam) const { return ref_focal > 0 ? std::sqrt(cam.fx * cam.fy) / ref_focal : 1.0; }
  friend bool operator==(const DepthRange&, const DepthRange&) = default;
};

/// unit in [0,1] -> scale * [min, max], elementwise.
template <class T>
Tensor<T> depth_from_unit(const Tensor<T>& unit, const DepthRange& range, double scale = 1) {
  Tensor<T> out = unit;
  for (auto& v : out.vec()) v = T(scale * (range.min + (range.max - range.min) * double(v)));
  return out;
}

/// Runs the depth estimator on [N,H,W] heatmaps; returns a [1,H,W] map in mm.
template <class T>
Tensor<T> estimate_depth_map(const Network<T>& de, const ParamSet<T>& params, const Tensor<T>& heatmaps,
                             const DepthRange& range, const Camera& cam) {
  if (heatmaps.dims() != de.spec().input)
    throw data_error("depth estimator expects " + shape_string(de.spec().input) + ", got " +
                     shape_string(heatmaps.dims()));
  return depth_from_unit(de.forward(params, heatmaps).output(), range, range.scale(cam));
}

// ---------------------------------------------------------------- detection

struct DetectOptions {
  double peak_threshold = 0.3;
  int nms_radius_px = 3;
  int max_people = 10;
  friend bool operator==(const DetectOptions&, const DetectOptions&) = default;
};

/// Peaks of the root heatmap channel, greedily suppressed in confidence order.
/// A pixel is a peak if it is >= its 8 neighbours, ties going to the earlier
/// pixel in row-major order. Boxes are decoded from `box_map` at the peak
/// (widened to at least 1 px); depth is read from `depth_map` ([1,H,W] or [H,W]).
std::vector<PersonDetection> detect_persons_2d(const TensorF& heatmaps, const TensorF& box_map,
                                               const TensorF& depth_map, int root_channel,
                                               const DetectOptions& opt = {});

/// Detections at the ground-truth root pixels, with depths taken from `depths`
/// (usually the sample's depth targets).
std::vector<PersonDetection> detections_at(const synth::AgrSample& sample, const std::vector<double>& depths);

// ---------------------------------------------------------------- volumes

/// Depth gate exp(-(z - depth)^2 / (2 sigma^2)).
double depth_gate(double z, double depth, double sigma);

/// Depth-gated back-projection of the heatmaps into `grid`: [N,Z,Y,X].
/// A voxel takes the bilinearly sampled heatmap at its projection times the
/// largest gate among detections whose box contains that projection.
template <class T>
Tensor<T> build_root_volume(const Tensor<T>& heatmaps, const std::vector<PersonDetection>& dets,
                            const GridSpec& grid, const Camera& cam, double sigma = 200);

/// Ungated back-projection: every voxel on a ray receives the same value.
template <class T>
Tensor<T> build_naive_volume(const Tensor<T>& heatmaps, const GridSpec& grid, const Camera& cam);

namespace reference {
// Serial triple-loop versions used as test oracles and benchmark baselines.
template <class T>
Tensor<T> build_root_volume(const Tensor<T>& heatmaps, const std::vector<PersonDetection>& dets,
                            const GridSpec& grid, const Camera& cam, double sigma = 200);
template <class T>
Tensor<T> build_naive_volume(const Tensor<T>& heatmaps, const GridSpec& grid, const Camera& cam);
}  // namespace reference

/// Writes `<stem>.agrt` plus a `<stem>.json` sidecar holding the grid.
void write_volume(const std::filesystem::path& stem, const GridSpec& grid, const TensorF& volume);
std::pair<GridSpec, TensorF> read_volume(const std::filesystem::path& stem);

// ---------------------------------------------------------------- NMS

struct RootCandidate {
  VoxelIndex index{};
  Vec3 world;
  double confidence = 0;
};

struct NmsOptions {
  int radius = 1;         // Chebyshev, voxels
  double threshold = 0.3;
  int max_people = 10;
  friend bool operator==(const NmsOptions&, const NmsOptions&) = default;
};

/// Local maxima of a [1,Z,Y,X] volume (>= all 26 neighbours, ties to the lower
/// linear offset) at or above threshold, accepted greedily by confidence with
/// Chebyshev suppression.
std::vector<RootCandidate> nms_3d(const TensorF& volume, const GridSpec& grid, const NmsOptions& opt = {});

// ---------------------------------------------------------------- losses

template <class T>
struct LossGrad {
  T value = 0;
  Tensor<T> grad;
};

/// sum_p |D(p) - Dt_p| over root pixels p of a [1,H,W] depth map.
template <class T>
LossGrad<T> loss_depth(const Tensor<T>& depth_map, const std::vector<Pixel>& roots, const std::vector<double>& targets) {
  if (depth_map.rank() != 3 || depth_map.dim(0) != 1) throw data_error("loss_depth expects a [1,H,W] map");
  if (roots.size() != targets.size()) throw data_error("loss_depth: root and target counts differ");
  LossGrad<T> out{T(0), Tensor<T>(depth_map.dims())};
  const int h = int(depth_map.dim(1)), w = int(depth_map.dim(2));
  for (std::size_t p = 0; p < roots.size(); ++p) {
    const auto [u, v] = roots[p];
    if (u < 0 || u >= w || v < 0 || v >= h)
      throw geometry_error("root pixel (" + std::to_string(u) + ", " + std::to_string(v) + ") is off the depth map");
    const T d = depth_map.at(0, v, u) - T(targets[p]);
    out.value += std::abs(d);
    out.grad.at(0, v, u) += T((d > 0) - (d < 0));
  }
  return out;
}

/// ||H - Ht||^2 over all voxels.
template <class T>
LossGrad<T> loss_ren(const Tensor<T>& h, const Tensor<T>& target) {
  if (h.dims() != target.dims())
    throw data_error("loss_ren grid mismatch: " + shape_string(h.dims()) + " vs " + shape_string(target.dims()));
  LossGrad<T> out{T(0), Tensor<T>(h.dims())};
  for (std::size_t i = 0; i < h.size(); ++i) {
    const T d = h[i] - target[i];
    out.value += d * d;
    out.grad[i] = 2 * d;
  }
  return out;
}

}  // namespace agrpose::ren
