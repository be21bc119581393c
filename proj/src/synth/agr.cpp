#include "agrpose/synth/agr.hpp"

#include <algorithm>

namespace agrpose::synth {
namespace {

constexpr double kFalsePositiveMin = 0.3;  // spurious blob amplitude ~ U(0.3, 1)

}  // namespace

void validate_noise(const NoiseConfig& n) {
  if (n.heatmap_jitter_px < 0 || n.false_positive_rate < 0 || n.box_sigma_px < 0 || n.depth_sigma_mm < 0)
    throw config_error("noise rates and sigmas must be non-negative");
  if (n.amplitude.lo < 0 || n.amplitude.lo > n.amplitude.hi)
    throw config_error("noise amplitude range must satisfy 0 <= lo <= hi");
  if (n.joint_dropout < 0 || n.joint_dropout > 1) throw config_error("joint dropout must lie in [0, 1]");
}

nlohmann::json noise_to_json(const NoiseConfig& n) {
  return {{"heatmap_jitter_px", n.heatmap_jitter_px},
          {"amplitude", {n.amplitude.lo, n.amplitude.hi}},
          {"false_positive_rate", n.false_positive_rate},
          {"box_sigma_px", n.box_sigma_px},
          {"depth_sigma_mm", n.depth_sigma_mm},
          {"joint_dropout", n.joint_dropout}};
}

AgrSample corrupt_agr(const AgrSample& sample, const NoiseConfig& noise, Rng& rng) {
  validate_noise(noise);
  AgrSample out = sample;
  if (noise.is_zero()) return out;

  const int n = sample.joint_count(), W = sample.width(), H = sample.height();
  const bool heatmap_noise = noise.heatmap_jitter_px > 0 || noise.amplitude != Range{1, 1} ||
                             noise.joint_dropout > 0 || noise.false_positive_rate > 0;
  if (heatmap_noise) {
    std::vector<Peak> peaks;
    std::bernoulli_distribution drop(noise.joint_dropout);
    for (const auto& pose : sample.gt_poses) {
      for (int k = 0; k < n; ++k) {
        const bool dropped = drop(rng);
        const double du = normal(rng, noise.heatmap_jitter_px), dv = normal(rng, noise.heatmap_jitter_px);
        const double amp = uniform(rng, noise.amplitude.lo, noise.amplitude.hi);
        if (dropped) continue;
        if (auto pr = try_project(sample.camera, pose.joints[k])) peaks.push_back({k, pr->u + du, pr->v + dv, amp});
      }
    }
    if (noise.false_positive_rate > 0) {
      const int blobs = std::poisson_distribution<int>(noise.false_positive_rate)(rng);
      for (int b = 0; b < blobs; ++b) {
        const int k = uniform_int(rng, 0, n - 1);
        const double u = uniform(rng, 0, W - 1), v = uniform(rng, 0, H - 1);
        peaks.push_back({k, u, v, uniform(rng, kFalsePositiveMin, 1.0)});
      }
    }
    out.heatmaps = render_peaks(peaks, n, W, H, sample.sigma2d);
  }

  if (noise.box_sigma_px > 0) {
    const std::size_t plane = std::size_t(W) * H;
    for (std::size_t i = 0; i < plane; ++i) {
      bool written = false;
      for (int c = 0; c < 4; ++c) written |= sample.box_map[c * plane + i] != 0.0f;
      if (!written) continue;
      for (int c = 0; c < 4; ++c) {
        float& b = out.box_map[c * plane + i];
        b = float(std::max(0.0, b + normal(rng, noise.box_sigma_px)));
      }
    }
  }

  for (auto& d : out.depth_targets) d += normal(rng, noise.depth_sigma_mm);
  return out;
}

}  // namespace agrpose::synth
