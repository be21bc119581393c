#include "agrpose/synth/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "agrpose/core/error.hpp"

namespace agrpose::synth {
namespace {

struct JointDef {
  const char* name;
  int parent;
  Vec3 offset;  // rest offset from the parent, mm, for a 1670 mm template
};

// Facing +y; the person's left is -x.
constexpr double kBaseStature = 1670.0;
const JointDef kJoints[] = {
    {"pelvis", -1, {0, 0, 0}},
    {"neck", 0, {0, 0, 520}},
    {"head", 1, {0, 0, 250}},
    {"l_shoulder", 1, {-180, 0, -30}},
    {"l_elbow", 3, {0, 0, -290}},
    {"l_wrist", 4, {0, 0, -260}},
    {"r_shoulder", 1, {180, 0, -30}},
    {"r_elbow", 6, {0, 0, -290}},
    {"r_wrist", 7, {0, 0, -260}},
    {"l_hip", 0, {-100, 0, -50}},
    {"l_knee", 9, {0, 0, -430}},
    {"l_ankle", 10, {0, 0, -420}},
    {"r_hip", 0, {100, 0, -50}},
    {"r_knee", 12, {0, 0, -430}},
    {"r_ankle", 13, {0, 0, -420}},
};

Vec3 random_axis(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    Vec3 a{n(rng), n(rng), n(rng)};
    const double len = norm(a);
    if (len > 1e-12) return (1.0 / len) * a;
  }
}

std::vector<Vec3> template_directions(const SkeletonSpec& skel, PoseTemplate tmpl) {
  std::vector<Vec3> dirs = skel.rest_directions;
  if (tmpl == PoseTemplate::Sitting) {
    for (int j = 0; j < skel.joint_count(); ++j) {
      const auto& n = skel.names[j];
      if (n == "l_knee" || n == "r_knee") dirs[j] = {0, 1, 0};
      if (n == "l_elbow" || n == "r_elbow") dirs[j] = {0, std::sin(0.5), -std::cos(0.5)};
    }
  }
  return dirs;
}

}  // namespace

SkeletonSpec default_skeleton(double stature) {
  if (!(stature > 0)) throw config_error("skeleton stature must be positive");
  SkeletonSpec s;
  const double scale = stature / kBaseStature;
  for (const auto& j : kJoints) {
    s.names.emplace_back(j.name);
    s.parents.push_back(j.parent);
    const double len = norm(j.offset);
    s.bone_lengths.push_back(len * scale);
    s.rest_directions.push_back(len > 0 ? (1.0 / len) * j.offset : Vec3{});
  }
  s.root = 0;
  s.stature = stature;
  return s;
}

void validate_skeleton(const SkeletonSpec& s) {
  const int n = s.joint_count();
  if (n < 1) throw config_error("skeleton has no joints");
  if (int(s.parents.size()) != n || int(s.bone_lengths.size()) != n || int(s.rest_directions.size()) != n)
    throw config_error("skeleton arrays have inconsistent lengths");
  if (s.root < 0 || s.root >= n || s.parents[s.root] != -1) throw config_error("skeleton root must have parent -1");
  for (int j = 0; j < n; ++j) {
    if (j == s.root) continue;
    if (s.parents[j] < 0 || s.parents[j] >= j)
      throw config_error("joint '" + s.names[j] + "' must have a parent listed before it");
    if (!(s.bone_lengths[j] > 0)) throw config_error("joint '" + s.names[j] + "' has a non-positive bone length");
  }
  if (!(s.stature > 0)) throw config_error("skeleton stature must be positive");
}

nlohmann::json skeleton_to_json(const SkeletonSpec& s) {
  nlohmann::json dirs = nlohmann::json::array();
  for (const auto& d : s.rest_directions) dirs.push_back({d.x, d.y, d.z});
  return {{"names", s.names},     {"parents", s.parents}, {"bone_lengths", s.bone_lengths},
          {"rest_directions", dirs}, {"root", s.root},     {"stature", s.stature}};
}

SkeletonSpec skeleton_from_json(const nlohmann::json& j) {
  SkeletonSpec s;
  try {
    s.names = j.at("names").get<std::vector<std::string>>();
    s.parents = j.at("parents").get<std::vector<int>>();
    s.bone_lengths = j.at("bone_lengths").get<std::vector<double>>();
    for (const auto& d : j.at("rest_directions")) {
      const auto a = d.get<std::array<double, 3>>();
      s.rest_directions.push_back({a[0], a[1], a[2]});
    }
    s.root = j.at("root").get<int>();
    s.stature = j.at("stature").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("malformed skeleton JSON: ") + e.what());
  }
  validate_skeleton(s);
  return s;
}

Pose3D template_pose(const SkeletonSpec& skel, PoseTemplate tmpl) {
  const auto dirs = template_directions(skel, tmpl);
  Pose3D p;
  p.joints.resize(skel.joint_count());
  for (int j = 0; j < skel.joint_count(); ++j) {
    if (j == skel.root) continue;
    p.joints[j] = p.joints[skel.parents[j]] + skel.bone_lengths[j] * dirs[j];
  }
  return p;
}

Pose3D sample_pose(const SkeletonSpec& skel, Rng& rng, double angle_jitter, PoseTemplate tmpl) {
  if (!(angle_jitter >= 0)) throw config_error("angle_jitter must be non-negative");
  if (angle_jitter == 0.0) return template_pose(skel, tmpl);
  const auto dirs = template_directions(skel, tmpl);
  const int n = skel.joint_count();
  std::vector<Mat3> global(n);
  Pose3D p;
  p.joints.resize(n);
  for (int j = 0; j < n; ++j) {
    const Vec3 axis = random_axis(rng);
    const double angle = uniform(rng, -angle_jitter, angle_jitter);
    const Mat3 local = axis_angle(axis, angle);
    if (j == skel.root) {
      global[j] = local;
      continue;
    }
    const int par = skel.parents[j];
    global[j] = global[par] * local;
    p.joints[j] = p.joints[par] + global[j] * (skel.bone_lengths[j] * dirs[j]);
  }
  return p;
}

Pose3D rotate_about_root(const Pose3D& pose, int root, double yaw) {
  const Mat3 r = axis_angle({0, 0, 1}, yaw);
  const Vec3 c = pose.joints.at(root);
  Pose3D out = pose;
  for (auto& j : out.joints) j = c + r * (j - c);
  return out;
}

Pose3D translated(const Pose3D& pose, Vec3 delta) {
  Pose3D out = pose;
  for (auto& j : out.joints) j += delta;
  return out;
}

BodyHeights body_heights(const SkeletonSpec& skel, const Pose3D& pose) {
  double lo = pose.joints.front().z, hi = lo;
  for (const auto& j : pose.joints) {
    lo = std::min(lo, j.z);
    hi = std::max(hi, j.z);
  }
  return {skel.stature, hi - lo};
}

}  // namespace agrpose::synth
