#pragma once

#include <string>
#include <vector>

#include "agrpose/core/random.hpp"
#include "agrpose/geometry/camera.hpp"
#include "agrpose/geometry/vec.hpp"
#include "json.hpp"

namespace agrpose::synth {

/// Kinematic tree. Joints are ordered so that every parent precedes its children.
struct SkeletonSpec {
  std::vector<std::string> names;
  std::vector<int> parents;              // -1 for the root
  std::vector<double> bone_lengths;      // mm, parent -> joint; 0 for the root
  std::vector<Vec3> rest_directions;     // unit bone directions of the standing template
  int root = 0;
  double stature = 0;                    // vertical extent of the standing template, mm

  int joint_count() const { return int(names.size()); }
  friend bool operator==(const SkeletonSpec&, const SkeletonSpec&) = default;
};

/// 15 joints rooted at the pelvis, scaled so the standing template is `stature` tall.
SkeletonSpec default_skeleton(double stature = 1700.0);

/// Throws a config error unless the parent graph is a tree rooted at `root`
/// with parents listed first and all bone lengths positive.
void validate_skeleton(const SkeletonSpec& skel);

nlohmann::json skeleton_to_json(const SkeletonSpec& skel);
SkeletonSpec skeleton_from_json(const nlohmann::json& j);

struct Pose3D {
  std::vector<Vec3> joints;  // world mm
  friend bool operator==(const Pose3D&, const Pose3D&) = default;
};

enum class PoseTemplate { Standing, Sitting };

/// Rest pose with the root at the origin, facing +y.
Pose3D template_pose(const SkeletonSpec& skel, PoseTemplate tmpl = PoseTemplate::Standing);

/// Forward-kinematics sample: each joint (root included) gets a random rotation
/// of at most `angle_jitter` radians about a uniformly random axis. Bone lengths
/// are preserved; the root stays at the origin.
Pose3D sample_pose(const SkeletonSpec& skel, Rng& rng, double angle_jitter,
                   PoseTemplate tmpl = PoseTemplate::Standing);

/// Rotation about the world vertical through the root.
Pose3D rotate_about_root(const Pose3D& pose, int root, double yaw);

Pose3D translated(const Pose3D& pose, Vec3 delta);

/// h_real = skeleton stature, h_pose = vertical joint extent of `pose`.
BodyHeights body_heights(const SkeletonSpec& skel, const Pose3D& pose);

}  // namespace agrpose::synth
