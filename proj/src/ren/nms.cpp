#include <algorithm>
#include <cmath>

#include "agrpose/ren/ren.hpp"

namespace agrpose::ren {

std::vector<RootCandidate> nms_3d(const TensorF& volume, const GridSpec& grid, const NmsOptions& opt) {
  validate_grid(grid);
  const int X = grid.dims[0], Y = grid.dims[1], Z = grid.dims[2];
  if (volume.dims() != Shape{1, std::size_t(Z), std::size_t(Y), std::size_t(X)})
    throw data_error("nms_3d expects [1," + std::to_string(Z) + "," + std::to_string(Y) + "," + std::to_string(X) +
                     "], got " + shape_string(volume.dims()));
  if (opt.radius < 1) throw config_error("nms radius must be >= 1");
  if (opt.max_people < 0) throw config_error("nms max_people must be >= 0");

  struct Peak {
    float value;
    std::size_t offset;
    VoxelIndex idx;
  };
  std::vector<Peak> peaks;
  const float* v = volume.data();
  for (int k = 0; k < Z; ++k)
    for (int j = 0; j < Y; ++j)
      for (int i = 0; i < X; ++i) {
        const std::size_t o = grid.offset({i, j, k});
        const float c = v[o];
        if (!(c >= opt.threshold)) continue;
        bool peak = true;
        for (int dk = -1; dk <= 1 && peak; ++dk)
          for (int dj = -1; dj <= 1 && peak; ++dj)
            for (int di = -1; di <= 1 && peak; ++di) {
              const VoxelIndex n{i + di, j + dj, k + dk};
              if ((di | dj | dk) == 0 || !grid.contains(n)) continue;
              const std::size_t no = grid.offset(n);
              if (v[no] > c || (v[no] == c && no < o)) peak = false;
            }
        if (peak) peaks.push_back({c, o, {i, j, k}});
      }
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    return a.value > b.value || (a.value == b.value && a.offset < b.offset);
  });

  std::vector<RootCandidate> out;
  for (const auto& p : peaks) {
    if (int(out.size()) >= opt.max_people) break;
    const bool suppressed = std::any_of(out.begin(), out.end(), [&](const RootCandidate& q) {
      int d = 0;
      for (int a = 0; a < 3; ++a) d = std::max(d, std::abs(q.index[a] - p.idx[a]));
      return d <= opt.radius;
    });
    if (!suppressed) out.push_back({p.idx, voxel_center(grid, p.idx), double(p.value)});
  }
  return out;
}

}  // namespace agrpose::ren
