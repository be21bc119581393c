#pragma once

#include <array>
#include <optional>

#include "agrpose/geometry/vec.hpp"
#include "json.hpp"

namespace agrpose {

/// Pinhole camera. World frame is z-up with the ground at z = 0. Camera frame
/// is x right, y down, z forward. Pixel coordinates put pixel centres on
/// integers: pixel (row r, col c) has centre (u, v) = (c, r).
struct Camera {
  double fx = 1, fy = 1, cx = 0, cy = 0;
  Mat3 R;   // world -> camera rotation
  Vec3 t;   // world -> camera translation (mm)
  int width = 1, height = 1;

  Vec3 to_camera(Vec3 p_world) const { return R * p_world + t; }
  Vec3 center() const;  // camera position in world coordinates
  friend bool operator==(const Camera&, const Camera&) = default;
};

struct Projection {
  double u = 0, v = 0, depth = 0;
};

/// Throws a geometry error when the point is not strictly in front of the camera.
Projection project(const Camera& cam, Vec3 p_world);
/// Same as project() but returns nullopt for points at or behind the camera plane.
std::optional<Projection> try_project(const Camera& cam, Vec3 p_world);

/// Inverse of project(); depth must be positive.
Vec3 backproject(const Camera& cam, double u, double v, double depth);

/// Camera at `position` facing horizontal heading `yaw` (0 = world +y, pi/2 = +x)
/// and pitched down by `theta`. fx = fy = f, principal point at the image centre.
Camera look_camera(double f, double theta, double yaw, Vec3 position, int width, int height);

/// Camera at (0, 0, cam_height) looking along +y with downward pitch theta.
Camera pitch_camera(double f, double theta, double cam_height, int width, int height);

/// Throws a geometry error unless R is orthonormal with det +1 (1e-9) and fx, fy > 0.
void validate_camera(const Camera& cam);

/// Camera JSON: {fx, fy, cx, cy, R:[9], t:[3], w, h}
nlohmann::json camera_to_json(const Camera& cam);
Camera camera_from_json(const nlohmann::json& j);

/// Person height terms for the box-size depth relation.
struct BodyHeights {
  double h_real = 0;  // standing height, mm
  double h_pose = 0;  // vertical extent in the current pose, mm
  double gamma_pose() const { return h_pose / h_real; }
};

/// Box-size depth: d = f * gamma_pose * h_real * cos(theta) / h_img.
double tbs_depth(double f, const BodyHeights& heights, double theta, double h_img);

}  // namespace agrpose
