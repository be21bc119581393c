#pragma once

#include <vector>

#include "agrpose/core/net.hpp"
#include "agrpose/core/tensor.hpp"
#include "agrpose/geometry/camera.hpp"
#include "agrpose/geometry/grid.hpp"
#include "agrpose/synth/skeleton.hpp"

namespace agrpose::pen {

/// Cube of side `extent_mm` centred on `center`, `dims` voxels per axis.
GridSpec fine_grid(Vec3 center, double extent_mm = 2000, int dims = 64);

/// Ungated back-projection of the heatmaps into the fine grid: [N,Z,Y,X].
template <class T>
Tensor<T> build_person_volume(const Tensor<T>& heatmaps, const Camera& cam, const GridSpec& fine);

/// Expected voxel index per joint channel of an [N,Z,Y,X] distribution volume.
/// Channels are renormalised; an all-zero channel is an error.
template <class T>
std::vector<Vec3> integral_decode_index(const Tensor<T>& h);

/// Voxel-index coordinates -> world mm (voxel centres sit at integer indices).
Vec3 index_to_world(const GridSpec& grid, Vec3 idx);
Vec3 world_to_index(const GridSpec& grid, Vec3 world);

/// Integral decoding to world coordinates.
template <class T>
synth::Pose3D integral_decode(const Tensor<T>& h, const GridSpec& grid);

/// Backward of integral_decode_index: d(loss)/d(h) given d(loss)/d(J_k) per joint,
/// for channels that already sum to one.
template <class T>
Tensor<T> integral_decode_backward(const Tensor<T>& h, const std::vector<Vec3>& grad_joints);

struct PenLoss {
  double value = 0;
  std::vector<Vec3> grad;  // d(loss)/d(decoded index), per joint
  int masked = 0;          // joints excluded because the target lies outside the cube
};

/// (1/N) sum_k mask_k * ||J_k - Jt_k||_1 in voxel-index units. Joints whose
/// target falls outside [-0.5, dims-0.5) on any axis are masked out. With
/// `world_units` the per-axis differences are scaled by the voxel size.
PenLoss loss_pen(const std::vector<Vec3>& decoded, const std::vector<Vec3>& target, const GridSpec& grid,
                 bool world_units = false);

struct PersonEstimate {
  synth::Pose3D pose;
  Vec3 refined_root;
};

/// Builds the fine volume around `root_candidate`, runs the pose network (the
/// same parameters for every person) and decodes every joint.
template <class T>
PersonEstimate estimate_person(const Network<T>& pen_net, const ParamSet<T>& params, const Tensor<T>& heatmaps,
                               const Camera& cam, Vec3 root_candidate, int root_joint, double extent_mm);

}  // namespace agrpose::pen
