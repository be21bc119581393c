#include "agrpose/geometry/camera.hpp"

#include <cmath>
#include <string>

#include "agrpose/core/error.hpp"

namespace agrpose {

Mat3 axis_angle(Vec3 axis, double angle) {
  const double n = norm(axis);
  if (n == 0.0 || angle == 0.0) return Mat3::identity();
  const Vec3 a = (1.0 / n) * axis;
  const double c = std::cos(angle), s = std::sin(angle), C = 1.0 - c;
  return {{c + a.x * a.x * C, a.x * a.y * C - a.z * s, a.x * a.z * C + a.y * s,  //
           a.y * a.x * C + a.z * s, c + a.y * a.y * C, a.y * a.z * C - a.x * s,  //
           a.z * a.x * C - a.y * s, a.z * a.y * C + a.x * s, c + a.z * a.z * C}};
}

Vec3 Camera::center() const {
  // C = -R^T t
  const Mat3 rt = R.transposed();
  return -1.0 * (rt * t);
}

std::optional<Projection> try_project(const Camera& cam, Vec3 p_world) {
  const Vec3 pc = cam.to_camera(p_world);
  if (!(pc.z > 0.0)) return std::nullopt;
  return Projection{cam.fx * pc.x / pc.z + cam.cx, cam.fy * pc.y / pc.z + cam.cy, pc.z};
}

Projection project(const Camera& cam, Vec3 p_world) {
  if (auto p = try_project(cam, p_world)) return *p;
  throw geometry_error("point (" + std::to_string(p_world.x) + ", " + std::to_string(p_world.y) + ", " +
                       std::to_string(p_world.z) + ") is behind the camera");
}

Vec3 backproject(const Camera& cam, double u, double v, double depth) {
  if (!(depth > 0.0)) throw geometry_error("backproject: depth must be positive");
  const Vec3 pc{(u - cam.cx) * depth / cam.fx, (v - cam.cy) * depth / cam.fy, depth};
  return cam.R.transposed() * (pc - cam.t);
}

Camera look_camera(double f, double theta, double yaw, Vec3 position, int width, int height) {
  const Vec3 up{0, 0, 1};
  const Vec3 heading{std::sin(yaw), std::cos(yaw), 0};
  const Vec3 right{std::cos(yaw), -std::sin(yaw), 0};
  const Vec3 forward = std::cos(theta) * heading - std::sin(theta) * up;
  const Vec3 down = -std::sin(theta) * heading - std::cos(theta) * up;
  Camera cam;
  cam.fx = cam.fy = f;
  cam.cx = 0.5 * (width - 1);
  cam.cy = 0.5 * (height - 1);
  cam.width = width;
  cam.height = height;
  cam.R = Mat3::from_rows(right, down, forward);
  cam.t = -1.0 * (cam.R * position);
  return cam;
}

Camera pitch_camera(double f, double theta, double cam_height, int width, int height) {
  return look_camera(f, theta, 0.0, Vec3{0, 0, cam_height}, width, height);
}

void validate_camera(const Camera& cam) {
  if (!(cam.fx > 0 && cam.fy > 0)) throw geometry_error("camera focal lengths must be positive");
  if (cam.width <= 0 || cam.height <= 0) throw geometry_error("camera image size must be positive");
  const Mat3 rtr = cam.R.transposed() * cam.R;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (std::abs(rtr(i, j) - (i == j ? 1.0 : 0.0)) >= 1e-9) throw geometry_error("camera R is not orthonormal");
  if (std::abs(cam.R.det() - 1.0) >= 1e-9) throw geometry_error("camera R must have determinant +1");
}

nlohmann::json camera_to_json(const Camera& cam) {
  return {{"fx", cam.fx}, {"fy", cam.fy}, {"cx", cam.cx}, {"cy", cam.cy}, {"R", cam.R.m},
          {"t", {cam.t.x, cam.t.y, cam.t.z}}, {"w", cam.width}, {"h", cam.height}};
}

Camera camera_from_json(const nlohmann::json& j) {
  Camera cam;
  try {
    cam.fx = j.at("fx").get<double>();
    cam.fy = j.at("fy").get<double>();
    cam.cx = j.at("cx").get<double>();
    cam.cy = j.at("cy").get<double>();
    cam.R.m = j.at("R").get<std::array<double, 9>>();
    const auto t = j.at("t").get<std::array<double, 3>>();
    cam.t = {t[0], t[1], t[2]};
    cam.width = j.at("w").get<int>();
    cam.height = j.at("h").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("malformed camera JSON: ") + e.what());
  }
  validate_camera(cam);
  return cam;
}

double tbs_depth(double f, const BodyHeights& heights, double theta, double h_img) {
  if (!(h_img > 0.0)) throw geometry_error("tbs_depth: image height must be positive");
  if (!(heights.h_real > 0.0)) throw geometry_error("tbs_depth: h_real must be positive");
  return f * heights.gamma_pose() * heights.h_real * std::cos(theta) / h_img;
}

}  // namespace agrpose
