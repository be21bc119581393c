#include "agrpose/synth/scene.hpp"

#include <algorithm>
#include <cmath>

#include "agrpose/core/error.hpp"

namespace agrpose::synth {

std::vector<Pose3D> place_people(const std::vector<Pose3D>& poses, int root, const Bounds& bounds,
                                 const PlacementOptions& opt, Rng& rng) {
  if (opt.min_sep < 0) throw config_error("min_sep must be non-negative");
  if (opt.max_retries < 1) throw config_error("max_retries must be at least 1");
  for (int a = 0; a < 3; ++a)
    if (bounds.min[a] > bounds.max[a]) throw config_error("placement bounds are inverted");

  std::vector<Pose3D> placed;
  placed.reserve(poses.size());
  for (std::size_t p = 0; p < poses.size(); ++p) {
    const Pose3D& pose = poses[p];
    double lowest = pose.joints.front().z;
    for (const auto& j : pose.joints) lowest = std::min(lowest, j.z);
    const Vec3 r0 = pose.joints.at(root);

    bool ok = false;
    for (int attempt = 0; attempt < opt.max_retries && !ok; ++attempt) {
      Vec3 target{uniform(rng, bounds.min.x, bounds.max.x), uniform(rng, bounds.min.y, bounds.max.y),
                  uniform(rng, bounds.min.z, bounds.max.z)};
      if (opt.ground_snap) target.z += r0.z - lowest;
      const Pose3D cand = translated(pose, target - r0);
      const Vec3 c = cand.joints[root];
      ok = std::all_of(placed.begin(), placed.end(),
                       [&](const Pose3D& q) { return distance(q.joints[root], c) >= opt.min_sep; });
      if (ok && opt.accept) ok = opt.accept(cand);
      if (ok) placed.push_back(cand);
    }
    if (!ok)
      throw data_error("could not place person " + std::to_string(p) + " after " +
                       std::to_string(opt.max_retries) + " attempts");
  }
  return placed;
}

void validate_camera_ranges(const CameraRanges& c) {
  auto check = [](const Range& r, const char* name) {
    if (!(r.lo <= r.hi)) throw config_error(std::string("camera range '") + name + "' is empty");
  };
  check(c.focal, "focal");
  check(c.theta, "theta");
  check(c.yaw, "yaw");
  check(c.distance, "distance");
  check(c.height, "height");
  if (!(c.focal.lo > 0)) throw config_error("camera focal length must be positive");
  if (c.theta.lo < -1.5 || c.theta.hi > 1.5) throw config_error("camera pitch must stay within +-1.5 rad");
  if (c.width < 1 || c.height_px < 1) throw config_error("camera image size must be positive");
}

Camera sample_camera(const CameraRanges& cfg, Rng& rng) {
  validate_camera_ranges(cfg);
  const double f = uniform(rng, cfg.focal.lo, cfg.focal.hi);
  const double theta = uniform(rng, cfg.theta.lo, cfg.theta.hi);
  const double yaw = uniform(rng, cfg.yaw.lo, cfg.yaw.hi);
  const double dist = uniform(rng, cfg.distance.lo, cfg.distance.hi);
  const double h = uniform(rng, cfg.height.lo, cfg.height.hi);
  const Vec3 heading{std::sin(yaw), std::cos(yaw), 0};
  Vec3 pos = cfg.target - dist * heading;
  pos.z = cfg.aim ? cfg.target.z + dist * std::tan(theta) + h : h;
  return look_camera(f, theta, yaw, pos, cfg.width, cfg.height_px);
}

}  // namespace agrpose::synth
