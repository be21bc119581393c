#include <algorithm>
#include <cmath>

#include "agrpose/ren/ren.hpp"

namespace agrpose::ren {
namespace {

struct Peak {
  double value;
  std::size_t offset;
};

bool before(const Peak& a, const Peak& b) { return a.value > b.value || (a.value == b.value && a.offset < b.offset); }

}  // namespace

std::vector<PersonDetection> detect_persons_2d(const TensorF& heatmaps, const TensorF& box_map,
                                               const TensorF& depth_map, int root_channel,
                                               const DetectOptions& opt) {
  if (heatmaps.rank() != 3) throw data_error("heatmaps must be [N,H,W]");
  const int H = int(heatmaps.dim(1)), W = int(heatmaps.dim(2));
  if (box_map.dims() != Shape{4, std::size_t(H), std::size_t(W)})
    throw data_error("box map " + shape_string(box_map.dims()) + " does not match heatmaps " +
                     shape_string(heatmaps.dims()));
  if (depth_map.size() != std::size_t(H) * W) throw data_error("depth map does not match the heatmap size");
  if (root_channel < 0 || root_channel >= int(heatmaps.dim(0))) throw config_error("root channel out of range");
  if (opt.nms_radius_px < 0 || opt.max_people < 0) throw config_error("detection radius and max_people must be >= 0");

  const float* ch = heatmaps.data() + std::size_t(root_channel) * H * W;
  std::vector<Peak> peaks;
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) {
      const float c = ch[v * W + u];
      if (!(c >= opt.peak_threshold) || c <= 0) continue;
      bool peak = true;
      for (int dv = -1; dv <= 1 && peak; ++dv)
        for (int du = -1; du <= 1 && peak; ++du) {
          const int nu = u + du, nv = v + dv;
          if ((du == 0 && dv == 0) || nu < 0 || nu >= W || nv < 0 || nv >= H) continue;
          const float n = ch[nv * W + nu];
          const bool earlier = nv * W + nu < v * W + u;
          if (n > c || (earlier && n == c)) peak = false;
        }
      if (peak) peaks.push_back({double(c), std::size_t(v) * W + u});
    }
  std::sort(peaks.begin(), peaks.end(), before);

  std::vector<PersonDetection> out;
  for (const auto& pk : peaks) {
    if (int(out.size()) >= opt.max_people) break;
    const int u = int(pk.offset % W), v = int(pk.offset / W);
    const bool suppressed = std::any_of(out.begin(), out.end(), [&](const PersonDetection& d) {
      return std::max(std::abs(d.u - u), std::abs(d.v - v)) <= opt.nms_radius_px;
    });
    if (suppressed) continue;
    PersonDetection d;
    d.u = u;
    d.v = v;
    d.confidence = std::clamp(pk.value, 0.0, 1.0);
    const double l = std::max(0.5, double(box_map.at(0, v, u))), t = std::max(0.5, double(box_map.at(1, v, u)));
    const double r = std::max(0.5, double(box_map.at(2, v, u))), b = std::max(0.5, double(box_map.at(3, v, u)));
    d.box = {u - l, v - t, u + r, v + b};
    d.depth = std::max(1.0, double(depth_map[std::size_t(v) * W + u]));
    out.push_back(d);
  }
  return out;
}

std::vector<PersonDetection> detections_at(const synth::AgrSample& s, const std::vector<double>& depths) {
  if (depths.size() != s.root_pixels.size()) throw data_error("one depth per person is required");
  std::vector<PersonDetection> out;
  for (std::size_t p = 0; p < s.root_pixels.size(); ++p) {
    const auto [u, v] = s.root_pixels[p];
    PersonDetection d;
    d.u = u;
    d.v = v;
    d.confidence = 1.0;
    d.box = {u - double(s.box_map.at(0, v, u)), v - double(s.box_map.at(1, v, u)), u + double(s.box_map.at(2, v, u)),
             v + double(s.box_map.at(3, v, u))};
    d.depth = depths[p];
    out.push_back(d);
  }
  return out;
}

}  // namespace agrpose::ren
