#pragma once

#include <functional>
#include <vector>

#include "agrpose/core/random.hpp"
#include "agrpose/geometry/camera.hpp"
#include "agrpose/synth/skeleton.hpp"
#include "json.hpp"

namespace agrpose::synth {

struct Range {
  double lo = 0, hi = 0;
  friend bool operator==(const Range&, const Range&) = default;
};

struct Bounds {
  Vec3 min, max;
  bool contains(Vec3 p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z && p.z <= max.z;
  }
  friend bool operator==(const Bounds&, const Bounds&) = default;
};

struct PlacementOptions {
  double min_sep = 600;   // mm between roots
  int max_retries = 1000; // per person
  // When set, bounds.z is the band for the lowest joint (the feet) instead of the root.
  bool ground_snap = false;
  // Extra acceptance test on a candidate root position (e.g. "projects into the image").
  std::function<bool(const Pose3D&)> accept;
};

/// Translates each pose so its root lands uniformly inside `bounds`, keeping
/// roots at least min_sep apart. Throws a data error after max_retries failed
/// draws for any one person.
std::vector<Pose3D> place_people(const std::vector<Pose3D>& poses, int root, const Bounds& bounds,
                                 const PlacementOptions& opt, Rng& rng);

/// Uniform camera ranges. Angles in radians, lengths in mm. With `aim` the
/// camera sits `distance` (horizontal) from `target`, looking along `yaw`, at
/// height target.z + distance * tan(theta) + height, so the optical axis passes
/// over the target by `height`. Without `aim`, `height` is the absolute camera height.
struct CameraRanges {
  Range focal{100, 100};
  Range theta{0, 0};
  Range yaw{0, 0};
  Range distance{6000, 6000};
  Range height{0, 0};
  bool aim = true;
  Vec3 target{0, 0, 900};
  int width = 120;
  int height_px = 64;
  friend bool operator==(const CameraRanges&, const CameraRanges&) = default;
};

void validate_camera_ranges(const CameraRanges& c);
Camera sample_camera(const CameraRanges& cfg, Rng& rng);

}  // namespace agrpose::synth
