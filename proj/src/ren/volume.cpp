#include <cmath>
#include <fstream>

#include "agrpose/core/tensor_io.hpp"
#include "agrpose/ren/ren.hpp"

namespace agrpose::ren {
namespace {

template <class T>
void check_heatmaps(const Tensor<T>& h) {
  if (h.rank() != 3) throw data_error("heatmaps must be [N,H,W], got " + shape_string(h.dims()));
}

// Shared driver: one pass per voxel computes the projection and the gate, then
// samples every channel. `gated` selects the box/depth test.
template <class T>
Tensor<T> project_volume(const Tensor<T>& heatmaps, const std::vector<PersonDetection>* dets, const GridSpec& grid,
                         const Camera& cam, double sigma) {
  check_heatmaps(heatmaps);
  validate_grid(grid);
  const int C = int(heatmaps.dim(0)), H = int(heatmaps.dim(1)), W = int(heatmaps.dim(2));
  const int X = grid.dims[0], Y = grid.dims[1], Z = grid.dims[2];
  const std::size_t plane = std::size_t(H) * W, vox = grid.voxel_count();
  Tensor<T> out({std::size_t(C), std::size_t(Z), std::size_t(Y), std::size_t(X)});
  const T* hm = heatmaps.data();
  T* dst = out.data();

#pragma omp parallel for collapse(2) schedule(static)
  for (int k = 0; k < Z; ++k)
    for (int j = 0; j < Y; ++j)
      for (int i = 0; i < X; ++i) {
        const auto pr = try_project(cam, voxel_center(grid, {i, j, k}));
        if (!pr) continue;
        const double u = pr->u, v = pr->v;
        if (!(u >= 0 && u <= W - 1 && v >= 0 && v <= H - 1)) continue;
        double gate = 1.0;
        if (dets) {
          gate = 0.0;
          for (const auto& d : *dets)
            if (u >= d.box.left && u <= d.box.right && v >= d.box.top && v <= d.box.bottom)
              gate = std::max(gate, depth_gate(pr->depth, d.depth, sigma));
          if (gate == 0.0) continue;
        }
        const int x0 = int(std::floor(u)), y0 = int(std::floor(v));
        const int x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1);
        const double ax = u - x0, ay = v - y0;
        const std::size_t o = grid.offset({i, j, k});
        for (int c = 0; c < C; ++c) {
          const T* ch = hm + c * plane;
          const double top = double(ch[y0 * W + x0]) * (1 - ax) + double(ch[y0 * W + x1]) * ax;
          const double bot = double(ch[y1 * W + x0]) * (1 - ax) + double(ch[y1 * W + x1]) * ax;
          dst[c * vox + o] = T((top * (1 - ay) + bot * ay) * gate);
        }
      }
  return out;
}

}  // namespace

double depth_gate(double z, double depth, double sigma) {
  const double dz = z - depth;
  return std::exp(-(dz * dz) / (2 * sigma * sigma));
}

template <class T>
Tensor<T> build_root_volume(const Tensor<T>& heatmaps, const std::vector<PersonDetection>& dets, const GridSpec& grid,
                            const Camera& cam, double sigma) {
  if (!(sigma > 0)) throw config_error("volume depth sigma must be positive");
  return project_volume(heatmaps, &dets, grid, cam, sigma);
}

template <class T>
Tensor<T> build_naive_volume(const Tensor<T>& heatmaps, const GridSpec& grid, const Camera& cam) {
  return project_volume<T>(heatmaps, nullptr, grid, cam, 1.0);
}

template TensorF build_root_volume(const TensorF&, const std::vector<PersonDetection>&, const GridSpec&,
                                   const Camera&, double);
template TensorD build_root_volume(const TensorD&, const std::vector<PersonDetection>&, const GridSpec&,
                                   const Camera&, double);
template TensorF build_naive_volume(const TensorF&, const GridSpec&, const Camera&);
template TensorD build_naive_volume(const TensorD&, const GridSpec&, const Camera&);

void write_volume(const std::filesystem::path& stem, const GridSpec& grid, const TensorF& volume) {
  if (volume.rank() != 4 || volume.dim(1) != std::size_t(grid.dims[2]) || volume.dim(2) != std::size_t(grid.dims[1]) ||
      volume.dim(3) != std::size_t(grid.dims[0]))
    throw data_error("volume " + shape_string(volume.dims()) + " does not match its grid");
  write_tensor(stem.string() + ".agrt", volume);
  std::ofstream js(stem.string() + ".json");
  js << nlohmann::json{{"grid", grid_to_json(grid)}, {"channels", volume.dim(0)}}.dump(2) << '\n';
  if (!js) throw data_error("cannot write " + stem.string() + ".json");
}

std::pair<GridSpec, TensorF> read_volume(const std::filesystem::path& stem) {
  const std::string jpath = stem.string() + ".json";
  std::ifstream js(jpath);
  if (!js) throw data_error("cannot open " + jpath);
  GridSpec grid;
  try {
    grid = grid_from_json(nlohmann::json::parse(js).at("grid"));
  } catch (const nlohmann::json::exception& e) {
    throw data_error(jpath + ": " + e.what());
  }
  auto vol = read_tensor<float>(stem.string() + ".agrt");
  if (vol.rank() != 4 || vol.dim(1) != std::size_t(grid.dims[2]) || vol.dim(2) != std::size_t(grid.dims[1]) ||
      vol.dim(3) != std::size_t(grid.dims[0]))
    throw data_error(stem.string() + ".agrt: shape " + shape_string(vol.dims()) + " disagrees with its sidecar grid");
  return {grid, std::move(vol)};
}

}  // namespace agrpose::ren
