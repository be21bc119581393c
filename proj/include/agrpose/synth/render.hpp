#pragma once

#include <array>
#include <vector>

#include "agrpose/core/tensor.hpp"
#include "agrpose/geometry/camera.hpp"
#include "agrpose/geometry/grid.hpp"
#include "agrpose/synth/skeleton.hpp"

namespace agrpose::synth {

using Pixel = std::array<int, 2>;  // (u, v) = (column, row)

/// One Gaussian peak to splat into a heatmap stack.
struct Peak {
  int channel = 0;
  double u = 0, v = 0;
  double amplitude = 1;
};

/// Max-combined Gaussian peaks in a [channels, H, W] stack, clamped to [0,1].
/// Peaks centred outside the image contribute nothing.
TensorF render_peaks(const std::vector<Peak>& peaks, int channels, int width, int height, double sigma);

/// GT 2D heatmaps [N, H, W]: one channel per joint, max over persons.
TensorF render_heatmaps(const std::vector<Pose3D>& poses, const Camera& cam, int width, int height,
                        double sigma);

/// Padded 2D box of a person in pixel coordinates (inclusive edges).
struct Box {
  double left = 0, top = 0, right = 0, bottom = 0;
  double width() const { return right - left; }
  double height() const { return bottom - top; }
};

struct BoxOptions {
  double pad_px = 2;
  int fill_radius = 2;  // box distances are also written within this Chebyshev radius of the root pixel
  friend bool operator==(const BoxOptions&, const BoxOptions&) = default;
};

struct BoxAndDepth {
  TensorF box_map;                    // [4, H, W]: distances to left, top, right, bottom edges
  std::vector<Pixel> root_pixels;
  std::vector<double> depths;         // camera-frame z of each root
  std::vector<Box> boxes;
};

/// Box embedding, root pixels and root depths for every person. Roots must
/// project into the image; the image size is taken from the camera.
BoxAndDepth render_box_and_depth(const std::vector<Pose3D>& poses, int root, const Camera& cam,
                                 const BoxOptions& opt = {});

/// Pixel containing the projection of `p` (round to nearest centre).
Pixel pixel_of(const Projection& p);

struct RootTarget {
  TensorF volume;  // [1, Z, Y, X]
  int skipped = 0; // roots outside the grid
};

/// Max-combined isotropic Gaussians in voxel-index space around every root,
/// truncated at 3 sigma.
RootTarget gt_root_heatmap3d(const std::vector<Pose3D>& poses, int root, const GridSpec& grid, double sigma_vox);

}  // namespace agrpose::synth
