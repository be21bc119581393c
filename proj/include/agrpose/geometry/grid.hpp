#pragma once

#include <array>

#include "agrpose/geometry/vec.hpp"
#include "json.hpp"

namespace agrpose {

using VoxelIndex = std::array<int, 3>;  // (i, j, k) along world (x, y, z)

/// Axis-aligned voxel grid. Voxel (i,j,k) has centre origin + (i+0.5, j+0.5, k+0.5) * voxel_size.
/// Volumes over a grid are stored as [C][Z][Y][X] tensors (x fastest).
struct GridSpec {
  Vec3 origin;
  Vec3 voxel_size{1, 1, 1};
  std::array<int, 3> dims{1, 1, 1};

  /// Grid whose axis-aligned extent is centred on `center`.
  static GridSpec centered(Vec3 center, Vec3 extent, std::array<int, 3> dims);

  Vec3 extent() const { return {voxel_size.x * dims[0], voxel_size.y * dims[1], voxel_size.z * dims[2]}; }
  Vec3 center() const { return origin + 0.5 * extent(); }
  std::size_t voxel_count() const { return std::size_t(dims[0]) * dims[1] * dims[2]; }
  bool contains(const VoxelIndex& idx) const;
  /// Linear offset of a voxel inside one [Z][Y][X] channel.
  std::size_t offset(const VoxelIndex& idx) const {
    return (std::size_t(idx[2]) * dims[1] + idx[1]) * dims[0] + idx[0];
  }
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Throws a geometry error for non-positive sizes or dims.
void validate_grid(const GridSpec& grid);

/// Throws a geometry error for indices outside the grid.
Vec3 voxel_center(const GridSpec& grid, const VoxelIndex& idx);

/// Continuous voxel coordinates: voxel centres map to integers.
Vec3 world_to_voxel(const GridSpec& grid, Vec3 p);

/// Nearest voxel index (may lie outside the grid).
VoxelIndex nearest_voxel(const GridSpec& grid, Vec3 p);

nlohmann::json grid_to_json(const GridSpec& g);
GridSpec grid_from_json(const nlohmann::json& j);

}  // namespace agrpose
