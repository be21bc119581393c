#include "agrpose/pipeline/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "agrpose/core/adam.hpp"
#include "agrpose/pen/pen.hpp"
#include "agrpose/ren/ren.hpp"
#include "agrpose/synth/render.hpp"

namespace agrpose::pipeline {

namespace fs = std::filesystem;

namespace {

Vec3 jittered(Vec3 p, double sigma, Rng& rng) { return {p.x + normal(rng, sigma), p.y + normal(rng, sigma), p.z + normal(rng, sigma)}; }

template <class T>
void scale_into(Tensor<T>& t, double s) {
  for (auto& v : t.vec()) v = T(double(v) * s);
}

// Channel of each joint's mirror image ("l_x" <-> "r_x"; others map to themselves).
std::vector<int> mirror_channels(const synth::SkeletonSpec& skel) {
  std::vector<int> out(skel.joint_count());
  std::iota(out.begin(), out.end(), 0);
  for (int j = 0; j < skel.joint_count(); ++j) {
    const auto& n = skel.names[j];
    if (n.size() < 2 || n[1] != '_' || (n[0] != 'l' && n[0] != 'r')) continue;
    const std::string other = std::string(1, n[0] == 'l' ? 'r' : 'l') + n.substr(1);
    const auto it = std::find(skel.names.begin(), skel.names.end(), other);
    if (it != skel.names.end()) out[j] = int(it - skel.names.begin());
  }
  return out;
}

// Left-right mirrored heatmaps: the image of the mirrored scene, with identical depths.
TensorF mirrored(const TensorF& h, const std::vector<int>& channels) {
  const std::size_t C = h.dim(0), H = h.dim(1), W = h.dim(2);
  TensorF out(h.dims());
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) out.at(std::size_t(channels[c]), y, W - 1 - x) = h.at(c, y, x);
  return out;
}

}  // namespace

SceneLosses accumulate_scene(Model& model, const synth::AgrSample& s, Rng& rng, double grad_scale) {
  const auto& cfg = model.config;
  const auto& tc = cfg.train;
  const int root = model.skeleton.root;
  const GridSpec grid = model.coarse_grid();
  SceneLosses out;
  const int P = s.person_count();

  // Depth estimator, supervised only at root pixels. The volumes below treat
  // its output as a constant.
  TensorF depth_map;
  const bool predicted_gate = tc.teacher_forcing && tc.gate_predicted_depth && tc.projection == Projection::Gated;
  const bool need_depth = tc.w_depth > 0 || !tc.teacher_forcing || predicted_gate;
  if (need_depth) {
    const bool mirror = tc.w_depth > 0 && tc.mirror_augment && uniform(rng, 0, 1) < 0.5;
    auto tape = model.de.forward(model.de_params, mirror ? mirrored(s.heatmaps, mirror_channels(model.skeleton)) : s.heatmaps);
    const double focal_scale = cfg.model.depth_range.scale(s.camera);
    const TensorF map = ren::depth_from_unit(tape.output(), cfg.model.depth_range, focal_scale);
    if (tc.w_depth > 0 && P > 0) {
      auto pixels = s.root_pixels;
      if (mirror)
        for (auto& px : pixels) px[0] = s.width() - 1 - px[0];
      auto ld = ren::loss_depth(map, pixels, s.depth_targets);
      out.depth = ld.value;
      scale_into(ld.grad, tc.w_depth * grad_scale * (cfg.model.depth_range.max - cfg.model.depth_range.min) * focal_scale);
      model.de.backward(model.de_params, tape, ld.grad);
    }
    if (!tc.teacher_forcing || predicted_gate)
      depth_map = mirror ? ren::estimate_depth_map(model.de, model.de_params, s.heatmaps, cfg.model.depth_range, s.camera) : map;
  }

  std::vector<ren::PersonDetection> dets;
  if (tc.projection == Projection::Gated) {
    if (predicted_gate) {
      // GT boxes, but gated where the DE currently puts each person, as at inference.
      std::vector<double> depths;
      for (const auto& px : s.root_pixels) depths.push_back(depth_map.at(0, px[1], px[0]));
      dets = ren::detections_at(s, depths);
    } else {
      dets = tc.teacher_forcing ? ren::detections_at(s, s.depth_targets)
                                : ren::detect_persons_2d(s.heatmaps, s.box_map, depth_map, root, cfg.eval.detect);
    }
  }
  const TensorF volume = tc.projection == Projection::Gated
                             ? ren::build_root_volume(s.heatmaps, dets, grid, s.camera, tc.gate_sigma)
                             : ren::build_naive_volume(s.heatmaps, grid, s.camera);

  std::vector<ren::RootCandidate> candidates;
  if (tc.w_ren > 0 || !tc.teacher_forcing) {
    auto tape = model.ren.forward(model.ren_params, volume);
    if (tc.w_ren > 0) {
      const auto target = synth::gt_root_heatmap3d(s.gt_poses, root, grid, tc.root_sigma_vox);
      auto lr = ren::loss_ren(tape.output(), target.volume);
      out.ren = lr.value;
      scale_into(lr.grad, tc.w_ren * grad_scale);
      model.ren.backward(model.ren_params, tape, lr.grad);
    }
    if (!tc.teacher_forcing) candidates = ren::nms_3d(tape.output(), grid, cfg.eval.nms);
  }

  if (tc.w_pen > 0 && P > 0) {
    std::vector<int> people(P);
    std::iota(people.begin(), people.end(), 0);
    std::shuffle(people.begin(), people.end(), rng);
    const int k = tc.pen_persons_per_step > 0 ? std::min(P, tc.pen_persons_per_step) : P;
    for (int q = 0; q < k; ++q) {
      const auto& gt = s.gt_poses[people[q]];
      const Vec3 gt_root = gt.joints[root];
      Vec3 center = jittered(gt_root, tc.fine_jitter_mm, rng);
      if (tc.fine_ray_jitter_mm > 0) {
        // At inference the cube centre inherits the root-depth error, which lies along the viewing ray.
        const double limit = 0.35 * cfg.fine.extent;
        const double t = std::clamp(normal(rng, tc.fine_ray_jitter_mm), -limit, limit);
        const Vec3 ray = gt_root - s.camera.center();
        center += (t / norm(ray)) * ray;
      }
      if (!tc.teacher_forcing) {
        double best = cfg.eval.metrics.match_max_dist;
        for (const auto& c : candidates)
          if (distance(c.world, gt_root) < best) best = distance(c.world, gt_root), center = c.world;
      }
      const GridSpec fine = pen::fine_grid(center, cfg.fine.extent, cfg.fine.dims);
      const TensorF fv = pen::build_person_volume(s.heatmaps, s.camera, fine);
      auto tape = model.pen.forward(model.pen_params, fv);
      const auto decoded = pen::integral_decode_index(tape.output());
      std::vector<Vec3> target;
      for (const auto& j : gt.joints) target.push_back(pen::world_to_index(fine, j));
      const auto lp = pen::loss_pen(decoded, target, fine);
      out.pen += lp.value / k;
      auto gh = pen::integral_decode_backward(tape.output(), lp.grad);
      scale_into(gh, tc.w_pen * grad_scale / k);
      model.pen.backward(model.pen_params, tape, gh);
    }
  }
  return out;
}

std::vector<EpochLosses> train_model(Model& model, const std::vector<synth::AgrSample>& data, const TrainOptions& opt) {
  const auto& tc = model.config.train;
  if (data.empty() && tc.epochs > model.epoch) throw data_error("training set is empty");
  for (const auto& s : data)
    if (s.joint_count() != model.skeleton.joint_count())
      throw data_error("training sample has " + std::to_string(s.joint_count()) + " joints, model expects " +
                       std::to_string(model.skeleton.joint_count()));

  std::vector<EpochLosses> history;
  if (!opt.loss_csv.empty() && fs::exists(opt.loss_csv) && model.epoch > 0)
    for (const auto& e : read_losses_csv(opt.loss_csv))
      if (e.epoch <= model.epoch) history.push_back(e);
  if (!opt.checkpoint_dir.empty() && model.epoch == 0) save_checkpoint(opt.checkpoint_dir / "epoch_000", model);
  if (!opt.loss_csv.empty()) write_losses_csv(opt.loss_csv, history);

  AdamOptions adam;
  adam.lr = tc.lr;
  const int batch = tc.batch;
  for (int epoch = model.epoch; epoch < tc.epochs; ++epoch) {
    if (tc.cosine_lr) adam.lr = tc.lr * 0.5 * (1 + std::cos(std::numbers::pi * epoch / tc.epochs));
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(tc.seed, {100, std::uint64_t(epoch)}));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochLosses e;
    e.epoch = epoch + 1;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      model.de_params.zero_grad();
      model.ren_params.zero_grad();
      model.pen_params.zero_grad();
      const std::size_t end = std::min(order.size(), start + std::size_t(batch));
      for (std::size_t i = start; i < end; ++i) {
        const std::size_t idx = order[i];
        Rng rng(derive_seed(tc.seed, {200, std::uint64_t(epoch), idx}));
        const auto l = accumulate_scene(model, data[idx], rng, 1.0 / double(end - start));
        if (!std::isfinite(l.depth) || !std::isfinite(l.ren) || !std::isfinite(l.pen)) {
          char buf[256];
          std::snprintf(buf, sizeof buf, "non-finite loss at epoch %d step %zu (scene %zu): depth=%g ren=%g pen=%g",
                        epoch + 1, start / batch + 1, idx, l.depth, l.ren, l.pen);
          throw numerical_error(buf);
        }
        e.depth += l.depth;
        e.ren += l.ren;
        e.pen += l.pen;
      }
      try {
        if (tc.w_depth > 0) adam_step(model.de_params, adam);
        if (tc.w_ren > 0) adam_step(model.ren_params, adam);
        if (tc.w_pen > 0) adam_step(model.pen_params, adam);
      } catch (const Error& err) {
        throw numerical_error("epoch " + std::to_string(epoch + 1) + " step " + std::to_string(start / batch + 1) +
                              ": " + err.what());
      }
      ++e.steps;
    }
    const double n = double(std::max<std::size_t>(1, data.size()));
    e.depth /= n;
    e.ren /= n;
    e.pen /= n;
    e.total = tc.w_depth * e.depth + tc.w_ren * e.ren + tc.w_pen * e.pen;
    model.epoch = epoch + 1;
    history.push_back(e);
    if (!opt.checkpoint_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%03d", model.epoch);
      save_checkpoint(opt.checkpoint_dir / name, model);
    }
    if (!opt.loss_csv.empty()) write_losses_csv(opt.loss_csv, history);
    if (opt.on_epoch) opt.on_epoch(e);
  }
  return history;
}

void write_losses_csv(const fs::path& path, const std::vector<EpochLosses>& losses) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << "epoch,total,depth,ren,pen,steps\n";
  char buf[256];
  for (const auto& e : losses) {
    std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g,%.10g,%d\n", e.epoch, e.total, e.depth, e.ren, e.pen, e.steps);
    out << buf;
  }
  if (!out) throw data_error("cannot write " + path.string());
}

std::vector<EpochLosses> read_losses_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "epoch,total,depth,ren,pen,steps") throw data_error(path.string() + ": unexpected header");
  std::vector<EpochLosses> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochLosses e;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%d", &e.epoch, &e.total, &e.depth, &e.ren, &e.pen, &e.steps) != 6)
      throw data_error(path.string() + ": malformed row '" + line + "'");
    out.push_back(e);
  }
  return out;
}

fs::path latest_checkpoint(const fs::path& dir) {
  fs::path best;
  if (!fs::is_directory(dir)) return best;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_directory() && name.rfind("epoch_", 0) == 0 && fs::exists(entry.path() / "model.json") &&
        (best.empty() || name > best.filename().string()))
      best = entry.path();
  }
  return best;
}

}  // namespace agrpose::pipeline
