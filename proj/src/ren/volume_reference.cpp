#include <cmath>

#include "agrpose/ren/ren.hpp"

namespace agrpose::ren::reference {
namespace {

template <class T>
double bilinear(const Tensor<T>& h, int c, double u, double v) {
  const int W = int(h.dim(2)), H = int(h.dim(1));
  const int x0 = int(std::floor(u)), y0 = int(std::floor(v));
  const int x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1);
  const double ax = u - x0, ay = v - y0;
  const double top = double(h.at(c, y0, x0)) * (1 - ax) + double(h.at(c, y0, x1)) * ax;
  const double bot = double(h.at(c, y1, x0)) * (1 - ax) + double(h.at(c, y1, x1)) * ax;
  return top * (1 - ay) + bot * ay;
}

bool in_box(const PersonDetection& d, double u, double v) {
  return u >= d.box.left && u <= d.box.right && v >= d.box.top && v <= d.box.bottom;
}

}  // namespace

template <class T>
Tensor<T> build_root_volume(const Tensor<T>& heatmaps, const std::vector<PersonDetection>& dets, const GridSpec& grid,
                            const Camera& cam, double sigma) {
  const int C = int(heatmaps.dim(0)), H = int(heatmaps.dim(1)), W = int(heatmaps.dim(2));
  Tensor<T> out({std::size_t(C), std::size_t(grid.dims[2]), std::size_t(grid.dims[1]), std::size_t(grid.dims[0])});
  for (int c = 0; c < C; ++c)
    for (int k = 0; k < grid.dims[2]; ++k)
      for (int j = 0; j < grid.dims[1]; ++j)
        for (int i = 0; i < grid.dims[0]; ++i) {
          const auto pr = try_project(cam, voxel_center(grid, {i, j, k}));
          if (!pr || pr->u < 0 || pr->u > W - 1 || pr->v < 0 || pr->v > H - 1) continue;
          double gate = 0.0;
          for (const auto& d : dets)
            if (in_box(d, pr->u, pr->v)) gate = std::max(gate, depth_gate(pr->depth, d.depth, sigma));
          if (gate > 0.0) out.at(c, k, j, i) = T(bilinear(heatmaps, c, pr->u, pr->v) * gate);
        }
  return out;
}

template <class T>
Tensor<T> build_naive_volume(const Tensor<T>& heatmaps, const GridSpec& grid, const Camera& cam) {
  const int C = int(heatmaps.dim(0)), H = int(heatmaps.dim(1)), W = int(heatmaps.dim(2));
  Tensor<T> out({std::size_t(C), std::size_t(grid.dims[2]), std::size_t(grid.dims[1]), std::size_t(grid.dims[0])});
  for (int c = 0; c < C; ++c)
    for (int k = 0; k < grid.dims[2]; ++k)
      for (int j = 0; j < grid.dims[1]; ++j)
        for (int i = 0; i < grid.dims[0]; ++i) {
          const auto pr = try_project(cam, voxel_center(grid, {i, j, k}));
          if (!pr || pr->u < 0 || pr->u > W - 1 || pr->v < 0 || pr->v > H - 1) continue;
          out.at(c, k, j, i) = T(bilinear(heatmaps, c, pr->u, pr->v));
        }
  return out;
}

template TensorF build_root_volume(const TensorF&, const std::vector<PersonDetection>&, const GridSpec&,
                                   const Camera&, double);
template TensorD build_root_volume(const TensorD&, const std::vector<PersonDetection>&, const GridSpec&,
                                   const Camera&, double);
template TensorF build_naive_volume(const TensorF&, const GridSpec&, const Camera&);
template TensorD build_naive_volume(const TensorD&, const GridSpec&, const Camera&);

}  // namespace agrpose::ren::reference
