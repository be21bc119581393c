#include "agrpose/geometry/grid.hpp"

#include <cmath>
#include <string>

#include "agrpose/core/error.hpp"

namespace agrpose {

GridSpec GridSpec::centered(Vec3 center, Vec3 extent, std::array<int, 3> dims) {
  GridSpec g;
  g.dims = dims;
  g.voxel_size = {extent.x / dims[0], extent.y / dims[1], extent.z / dims[2]};
  g.origin = center - 0.5 * extent;
  return g;
}

bool GridSpec::contains(const VoxelIndex& idx) const {
  for (int a = 0; a < 3; ++a)
    if (idx[a] < 0 || idx[a] >= dims[a]) return false;
  return true;
}

void validate_grid(const GridSpec& grid) {
  for (int a = 0; a < 3; ++a) {
    if (!(grid.voxel_size[a] > 0)) throw geometry_error("grid voxel size must be positive on every axis");
    if (grid.dims[a] < 1) throw geometry_error("grid dims must be >= 1");
  }
}

Vec3 voxel_center(const GridSpec& grid, const VoxelIndex& idx) {
  if (!grid.contains(idx))
    throw geometry_error("voxel index (" + std::to_string(idx[0]) + "," + std::to_string(idx[1]) + "," +
                         std::to_string(idx[2]) + ") outside grid");
  return {grid.origin.x + (idx[0] + 0.5) * grid.voxel_size.x, grid.origin.y + (idx[1] + 0.5) * grid.voxel_size.y,
          grid.origin.z + (idx[2] + 0.5) * grid.voxel_size.z};
}

Vec3 world_to_voxel(const GridSpec& grid, Vec3 p) {
  return {(p.x - grid.origin.x) / grid.voxel_size.x - 0.5, (p.y - grid.origin.y) / grid.voxel_size.y - 0.5,
          (p.z - grid.origin.z) / grid.voxel_size.z - 0.5};
}

VoxelIndex nearest_voxel(const GridSpec& grid, Vec3 p) {
  const Vec3 c = world_to_voxel(grid, p);
  return {int(std::lround(c.x)), int(std::lround(c.y)), int(std::lround(c.z))};
}

nlohmann::json grid_to_json(const GridSpec& g) {
  return {{"origin", {g.origin.x, g.origin.y, g.origin.z}},
          {"voxel_size", {g.voxel_size.x, g.voxel_size.y, g.voxel_size.z}},
          {"dims", g.dims}};
}

GridSpec grid_from_json(const nlohmann::json& j) {
  GridSpec g;
  try {
    const auto o = j.at("origin").get<std::array<double, 3>>();
    const auto s = j.at("voxel_size").get<std::array<double, 3>>();
    g.origin = {o[0], o[1], o[2]};
    g.voxel_size = {s[0], s[1], s[2]};
    g.dims = j.at("dims").get<std::array<int, 3>>();
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("malformed grid JSON: ") + e.what());
  }
  validate_grid(g);
  return g;
}

}  // namespace agrpose
