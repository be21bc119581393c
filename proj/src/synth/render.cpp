#include "agrpose/synth/render.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "agrpose/core/error.hpp"

namespace agrpose::synth {
namespace {

// Beyond this many sigmas exp(-d^2/2s^2) < 1e-48, which is 0 in float.
constexpr double kSupportSigmas = 14.9;

bool inside_image(double u, double v, int width, int height) {
  return u >= -0.5 && u < width - 0.5 && v >= -0.5 && v < height - 0.5;
}

}  // namespace

TensorF render_peaks(const std::vector<Peak>& peaks, int channels, int width, int height, double sigma) {
  if (!(sigma > 0)) throw config_error("heatmap sigma must be positive");
  if (channels < 1 || width < 1 || height < 1) throw config_error("heatmap size must be positive");
  TensorF out({std::size_t(channels), std::size_t(height), std::size_t(width)});
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  const int reach = int(std::ceil(kSupportSigmas * sigma));
  for (const auto& pk : peaks) {
    if (pk.channel < 0 || pk.channel >= channels) throw data_error("peak channel out of range");
    if (!inside_image(pk.u, pk.v, width, height) || pk.amplitude <= 0) continue;
    const int cu = int(std::lround(pk.u)), cv = int(std::lround(pk.v));
    const int r0 = std::max(0, cv - reach), r1 = std::min(height - 1, cv + reach);
    const int c0 = std::max(0, cu - reach), c1 = std::min(width - 1, cu + reach);
    for (int r = r0; r <= r1; ++r) {
      const double dv = r - pk.v;
      for (int c = c0; c <= c1; ++c) {
        const double du = c - pk.u;
        const double val = std::min(1.0, pk.amplitude * std::exp(-(du * du + dv * dv) * inv2s2));
        float& dst = out.at(pk.channel, r, c);
        dst = std::max(dst, float(val));
      }
    }
  }
  return out;
}

TensorF render_heatmaps(const std::vector<Pose3D>& poses, const Camera& cam, int width, int height,
                        double sigma) {
  if (poses.empty()) throw data_error("render_heatmaps needs at least one pose to know the joint count");
  const int n = int(poses.front().joints.size());
  std::vector<Peak> peaks;
  for (const auto& pose : poses) {
    if (int(pose.joints.size()) != n) throw data_error("poses disagree on the joint count");
    for (int k = 0; k < n; ++k)
      if (auto pr = try_project(cam, pose.joints[k])) peaks.push_back({k, pr->u, pr->v, 1.0});
  }
  return render_peaks(peaks, n, width, height, sigma);
}

Pixel pixel_of(const Projection& p) { return {int(std::floor(p.u + 0.5)), int(std::floor(p.v + 0.5))}; }

BoxAndDepth render_box_and_depth(const std::vector<Pose3D>& poses, int root, const Camera& cam,
                                 const BoxOptions& opt) {
  if (opt.pad_px < 0 || opt.fill_radius < 0) throw config_error("box padding and fill radius must be >= 0");
  const int W = cam.width, H = cam.height;
  BoxAndDepth out;
  out.box_map = TensorF({4, std::size_t(H), std::size_t(W)});

  for (std::size_t p = 0; p < poses.size(); ++p) {
    const auto& pose = poses[p];
    const auto rp = try_project(cam, pose.joints.at(root));
    if (!rp) throw geometry_error("root of person " + std::to_string(p) + " is behind the camera");
    const Pixel px = pixel_of(*rp);
    if (px[0] < 0 || px[0] >= W || px[1] < 0 || px[1] >= H)
      throw geometry_error("root of person " + std::to_string(p) + " projects outside the image");
    Box b{rp->u, rp->v, rp->u, rp->v};
    for (const auto& j : pose.joints) {
      if (auto pr = try_project(cam, j)) {
        b.left = std::min(b.left, pr->u);
        b.right = std::max(b.right, pr->u);
        b.top = std::min(b.top, pr->v);
        b.bottom = std::max(b.bottom, pr->v);
      }
    }
    b.left -= opt.pad_px;
    b.top -= opt.pad_px;
    b.right += opt.pad_px;
    b.bottom += opt.pad_px;
    out.root_pixels.push_back(px);
    out.depths.push_back(rp->depth);
    out.boxes.push_back(b);
  }

  auto write = [&](std::size_t p, int u, int v) {
    const Box& b = out.boxes[p];
    out.box_map.at(0, v, u) = float(std::max(0.0, u - b.left));
    out.box_map.at(1, v, u) = float(std::max(0.0, v - b.top));
    out.box_map.at(2, v, u) = float(std::max(0.0, b.right - u));
    out.box_map.at(3, v, u) = float(std::max(0.0, b.bottom - v));
  };

  // Far to near, so nearer (occluding) people win shared pixels; exact root
  // pixels are written last so each one holds its own person's box.
  std::vector<std::size_t> order(poses.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return out.depths[a] > out.depths[b]; });
  const int R = opt.fill_radius;
  for (auto p : order) {
    const auto [pu, pv] = out.root_pixels[p];
    for (int v = std::max(0, pv - R); v <= std::min(H - 1, pv + R); ++v)
      for (int u = std::max(0, pu - R); u <= std::min(W - 1, pu + R); ++u) write(p, u, v);
  }
  for (auto p : order) write(p, out.root_pixels[p][0], out.root_pixels[p][1]);
  return out;
}

RootTarget gt_root_heatmap3d(const std::vector<Pose3D>& poses, int root, const GridSpec& grid, double sigma_vox) {
  if (!(sigma_vox > 0)) throw config_error("root heatmap sigma must be positive");
  validate_grid(grid);
  RootTarget out;
  out.volume = TensorF({1, std::size_t(grid.dims[2]), std::size_t(grid.dims[1]), std::size_t(grid.dims[0])});
  const double reach = 3.0 * sigma_vox;
  const double inv2s2 = 1.0 / (2.0 * sigma_vox * sigma_vox);
  for (const auto& pose : poses) {
    const Vec3 c = world_to_voxel(grid, pose.joints.at(root));
    if (!grid.contains(nearest_voxel(grid, pose.joints.at(root)))) {
      ++out.skipped;
      continue;
    }
    int lo[3], hi[3];
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::max(0, int(std::ceil(c[a] - reach)));
      hi[a] = std::min(grid.dims[a] - 1, int(std::floor(c[a] + reach)));
    }
    for (int k = lo[2]; k <= hi[2]; ++k)
      for (int j = lo[1]; j <= hi[1]; ++j)
        for (int i = lo[0]; i <= hi[0]; ++i) {
          const double d2 = (i - c.x) * (i - c.x) + (j - c.y) * (j - c.y) + (k - c.z) * (k - c.z);
          if (d2 > reach * reach) continue;
          float& dst = out.volume[grid.offset({i, j, k})];
          dst = std::max(dst, float(std::exp(-d2 * inv2s2)));
        }
  }
  return out;
}

}  // namespace agrpose::synth
