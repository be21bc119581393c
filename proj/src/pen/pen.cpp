#include "agrpose/pen/pen.hpp"

#include <cmath>

#include "agrpose/core/error.hpp"
#include "agrpose/ren/ren.hpp"

namespace agrpose::pen {

GridSpec fine_grid(Vec3 center, double extent_mm, int dims) {
  if (!(extent_mm > 0) || dims < 1) throw config_error("fine grid needs a positive extent and dims");
  return GridSpec::centered(center, {extent_mm, extent_mm, extent_mm}, {dims, dims, dims});
}

template <class T>
Tensor<T> build_person_volume(const Tensor<T>& heatmaps, const Camera& cam, const GridSpec& fine) {
  return ren::build_naive_volume(heatmaps, fine, cam);
}

namespace {

template <class T>
void check_volume(const Tensor<T>& h) {
  if (h.rank() != 4) throw data_error("expected an [N,Z,Y,X] volume, got " + shape_string(h.dims()));
}

}  // namespace

template <class T>
std::vector<Vec3> integral_decode_index(const Tensor<T>& h) {
  check_volume(h);
  const std::size_t N = h.dim(0), Z = h.dim(1), Y = h.dim(2), X = h.dim(3);
  std::vector<Vec3> out(N);
  for (std::size_t c = 0; c < N; ++c) {
    const T* p = h.data() + c * Z * Y * X;
    double s = 0, sx = 0, sy = 0, sz = 0;
    for (std::size_t k = 0; k < Z; ++k)
      for (std::size_t j = 0; j < Y; ++j)
        for (std::size_t i = 0; i < X; ++i) {
          const double w = p[(k * Y + j) * X + i];
          s += w;
          sx += w * double(i);
          sy += w * double(j);
          sz += w * double(k);
        }
    if (!(s > 0)) throw numerical_error("integral decode: channel " + std::to_string(c) + " has no mass");
    out[c] = {sx / s, sy / s, sz / s};
  }
  return out;
}

Vec3 index_to_world(const GridSpec& g, Vec3 idx) {
  return {g.origin.x + (idx.x + 0.5) * g.voxel_size.x, g.origin.y + (idx.y + 0.5) * g.voxel_size.y,
          g.origin.z + (idx.z + 0.5) * g.voxel_size.z};
}

Vec3 world_to_index(const GridSpec& g, Vec3 w) { return world_to_voxel(g, w); }

template <class T>
synth::Pose3D integral_decode(const Tensor<T>& h, const GridSpec& grid) {
  if (std::size_t(grid.dims[0]) != h.dim(3) || std::size_t(grid.dims[1]) != h.dim(2) ||
      std::size_t(grid.dims[2]) != h.dim(1))
    throw data_error("decode volume " + shape_string(h.dims()) + " does not match the fine grid");
  synth::Pose3D pose;
  for (const auto& idx : integral_decode_index(h)) pose.joints.push_back(index_to_world(grid, idx));
  return pose;
}

template <class T>
Tensor<T> integral_decode_backward(const Tensor<T>& h, const std::vector<Vec3>& grad_joints) {
  check_volume(h);
  const std::size_t N = h.dim(0), Z = h.dim(1), Y = h.dim(2), X = h.dim(3);
  if (grad_joints.size() != N) throw data_error("decode backward: one gradient per joint channel is required");
  const auto J = integral_decode_index(h);
  Tensor<T> g(h.dims());
  for (std::size_t c = 0; c < N; ++c) {
    const T* p = h.data() + c * Z * Y * X;
    double s = 0;
    for (std::size_t i = 0; i < Z * Y * X; ++i) s += p[i];
    // J = sum(x h) / sum(h)  =>  dJ/dh(x) = (x - J) / sum(h)
    const Vec3 gj = grad_joints[c];
    const double base = -(gj.x * J[c].x + gj.y * J[c].y + gj.z * J[c].z);
    T* q = g.data() + c * Z * Y * X;
    for (std::size_t k = 0; k < Z; ++k)
      for (std::size_t j = 0; j < Y; ++j)
        for (std::size_t i = 0; i < X; ++i)
          q[(k * Y + j) * X + i] = T((gj.x * double(i) + gj.y * double(j) + gj.z * double(k) + base) / s);
  }
  return g;
}

PenLoss loss_pen(const std::vector<Vec3>& decoded, const std::vector<Vec3>& target, const GridSpec& grid,
                 bool world_units) {
  if (decoded.size() != target.size() || decoded.empty())
    throw data_error("loss_pen: decoded and target poses have different joint counts");
  const double n = double(decoded.size());
  PenLoss out;
  out.grad.resize(decoded.size());
  for (std::size_t k = 0; k < decoded.size(); ++k) {
    bool inside = true;
    for (int a = 0; a < 3; ++a) inside &= target[k][a] >= -0.5 && target[k][a] < grid.dims[a] - 0.5;
    if (!inside) {
      ++out.masked;
      continue;
    }
    for (int a = 0; a < 3; ++a) {
      const double scale = world_units ? grid.voxel_size[a] : 1.0;
      const double d = decoded[k][a] - target[k][a];
      out.value += scale * std::abs(d) / n;
      out.grad[k][a] = scale * double((d > 0) - (d < 0)) / n;
    }
  }
  return out;
}

template <class T>
PersonEstimate estimate_person(const Network<T>& pen_net, const ParamSet<T>& params, const Tensor<T>& heatmaps,
                               const Camera& cam, Vec3 root_candidate, int root_joint, double extent_mm) {
  const auto& in = pen_net.spec().input;
  if (in.size() != 4 || in[1] != in[2] || in[2] != in[3])
    throw config_error("pose network input must be a cube [N,D,D,D], got " + shape_string(in));
  const GridSpec fine = fine_grid(root_candidate, extent_mm, int(in[1]));
  const auto volume = build_person_volume(heatmaps, cam, fine);
  const auto tape = pen_net.forward(params, volume);
  PersonEstimate est;
  est.pose = integral_decode(tape.output(), fine);
  est.refined_root = est.pose.joints.at(root_joint);
  return est;
}

template TensorF build_person_volume(const TensorF&, const Camera&, const GridSpec&);
template TensorD build_person_volume(const TensorD&, const Camera&, const GridSpec&);
template std::vector<Vec3> integral_decode_index(const TensorF&);
template std::vector<Vec3> integral_decode_index(const TensorD&);
template synth::Pose3D integral_decode(const TensorF&, const GridSpec&);
template synth::Pose3D integral_decode(const TensorD&, const GridSpec&);
template TensorF integral_decode_backward(const TensorF&, const std::vector<Vec3>&);
template TensorD integral_decode_backward(const TensorD&, const std::vector<Vec3>&);
template PersonEstimate estimate_person(const Network<float>&, const ParamSet<float>&, const TensorF&, const Camera&,
                                        Vec3, int, double);
template PersonEstimate estimate_person(const Network<double>&, const ParamSet<double>&, const TensorD&,
                                        const Camera&, Vec3, int, double);

}  // namespace agrpose::pen
