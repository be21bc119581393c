#include "agrpose/synth/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "agrpose/core/error.hpp"
#include "agrpose/core/tensor_io.hpp"

namespace agrpose::synth {
namespace fs = std::filesystem;
namespace {

constexpr const char* kFormat = "agrpose-dataset";
constexpr int kVersion = 1;

std::string sample_stem(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%06zu", i);
  return buf;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw data_error("failed writing " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw data_error(path.string() + ": " + e.what());
  }
}

}  // namespace

void validate_synth(const SynthConfig& c) {
  if (c.count < 0) throw config_error("synth.count must be non-negative");
  if (c.min_people < 1 || c.max_people < c.min_people)
    throw config_error("synth people counts must satisfy 1 <= min_people <= max_people");
  for (int a = 0; a < 3; ++a)
    if (c.bounds.min[a] > c.bounds.max[a]) throw config_error("synth.bounds are inverted");
  if (c.min_sep < 0) throw config_error("synth.min_sep must be non-negative");
  if (c.max_retries < 1) throw config_error("synth.max_retries must be at least 1");
  if (c.poses.angle_jitter < 0) throw config_error("synth.poses.angle_jitter must be non-negative");
  if (c.poses.sitting_fraction < 0 || c.poses.sitting_fraction > 1)
    throw config_error("synth.poses.sitting_fraction must lie in [0, 1]");
  if (!(c.sigma2d > 0)) throw config_error("synth.sigma2d must be positive");
  if (c.box.pad_px < 0 || c.box.fill_radius < 0) throw config_error("synth.box values must be non-negative");
  validate_camera_ranges(c.camera);
  validate_noise(c.noise);
}

AgrSample generate_scene(const SynthConfig& cfg, const SkeletonSpec& skel, std::uint64_t index) {
  Rng rng(derive_seed(cfg.seed, {index}));
  const int root = skel.root;

  const int people = uniform_int(rng, cfg.min_people, cfg.max_people);
  std::vector<Pose3D> poses;
  for (int p = 0; p < people; ++p) {
    std::bernoulli_distribution sit(cfg.poses.sitting_fraction);
    const auto tmpl = sit(rng) ? PoseTemplate::Sitting : PoseTemplate::Standing;
    const Pose3D local = sample_pose(skel, rng, cfg.poses.angle_jitter, tmpl);
    poses.push_back(rotate_about_root(local, root, uniform(rng, -M_PI, M_PI)));
  }

  // A camera that cannot see enough of the placement region is redrawn.
  constexpr int kCameraAttempts = 20;
  for (int attempt = 0;; ++attempt) {
    const Camera cam = sample_camera(cfg.camera, rng);
    PlacementOptions opt;
    opt.min_sep = cfg.min_sep;
    opt.max_retries = cfg.max_retries;
    opt.ground_snap = cfg.ground_snap;
    opt.accept = [&](const Pose3D& pose) {
      const auto pr = try_project(cam, pose.joints[root]);
      if (!pr || pr->depth < 100.0) return false;
      const Pixel px = pixel_of(*pr);
      return px[0] >= 0 && px[0] < cam.width && px[1] >= 0 && px[1] < cam.height;
    };
    std::vector<Pose3D> placed;
    try {
      placed = place_people(poses, root, cfg.bounds, opt, rng);
    } catch (const Error& e) {
      if (attempt + 1 >= kCameraAttempts)
        throw data_error("scene " + std::to_string(index) + ": " + e.what());
      continue;
    }

    AgrSample s;
    s.camera = cam;
    s.sigma2d = cfg.sigma2d;
    s.heatmaps = render_heatmaps(placed, cam, cam.width, cam.height, cfg.sigma2d);
    auto bd = render_box_and_depth(placed, root, cam, cfg.box);
    s.box_map = std::move(bd.box_map);
    s.depth_targets = std::move(bd.depths);
    s.root_pixels = std::move(bd.root_pixels);
    s.gt_poses = std::move(placed);
    return corrupt_agr(s, cfg.noise, rng);
  }
}

std::vector<AgrSample> generate_scenes(const SynthConfig& cfg, const SkeletonSpec& skel, std::uint64_t first,
                                       int count) {
  validate_synth(cfg);
  validate_skeleton(skel);
  std::vector<AgrSample> out(std::max(0, count));
  std::vector<std::string> errors(out.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) {
    try {
      out[i] = generate_scene(cfg, skel, first + i);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw data_error(e);
  return out;
}

void write_dataset(const fs::path& dir, const std::vector<AgrSample>& samples, const nlohmann::json& meta) {
  std::error_code ec;
  fs::create_directories(dir / "samples", ec);
  if (ec) throw data_error("cannot create " + (dir / "samples").string() + ": " + ec.message());

  nlohmann::json cams = nlohmann::json::array();
  nlohmann::json entries = nlohmann::json::array();
  int joints = 0, width = 0, height = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const int P = s.person_count();
    if (int(s.depth_targets.size()) != P || int(s.root_pixels.size()) != P)
      throw data_error("sample " + std::to_string(i) + " has inconsistent per-person lists");
    if (i == 0) {
      joints = s.joint_count();
      width = s.width();
      height = s.height();
    } else if (s.joint_count() != joints || s.width() != width || s.height() != height) {
      throw data_error("sample " + std::to_string(i) + " differs in joint count or map size");
    }
    const fs::path base = dir / "samples" / sample_stem(i);
    write_tensor(base.string() + "_heatmaps.agrt", s.heatmaps);
    write_tensor(base.string() + "_box.agrt", s.box_map);
    if (P > 0) {
      TensorD depth({std::size_t(P)}), roots({std::size_t(P), 2}), poses({std::size_t(P), std::size_t(joints), 3});
      for (int p = 0; p < P; ++p) {
        depth[p] = s.depth_targets[p];
        roots[2 * p] = s.root_pixels[p][0];
        roots[2 * p + 1] = s.root_pixels[p][1];
        if (int(s.gt_poses[p].joints.size()) != joints)
          throw data_error("sample " + std::to_string(i) + " person " + std::to_string(p) + " has the wrong joint count");
        for (int k = 0; k < joints; ++k)
          for (int a = 0; a < 3; ++a) poses.at(p, k, a) = s.gt_poses[p].joints[k][a];
      }
      write_tensor(base.string() + "_depth.agrt", depth);
      write_tensor(base.string() + "_roots.agrt", roots);
      write_tensor(base.string() + "_poses.agrt", poses);
    }
    cams.push_back(camera_to_json(s.camera));
    entries.push_back({{"id", sample_stem(i)}, {"persons", P}, {"sigma2d", s.sigma2d}});
  }

  nlohmann::json manifest = {{"format", kFormat}, {"version", kVersion},     {"count", samples.size()},
                             {"joint_count", joints}, {"width", width},     {"height", height},
                             {"samples", entries},    {"meta", meta}};
  write_json(dir / "manifest.json", manifest);
  write_json(dir / "cameras.json", cams);
}

Dataset read_dataset(const fs::path& dir) {
  const fs::path mpath = dir / "manifest.json";
  Dataset ds;
  ds.manifest = read_json(mpath);
  std::vector<nlohmann::json> entries;
  nlohmann::json cams;
  int joints = 0;
  try {
    if (ds.manifest.at("format") != kFormat) throw data_error(mpath.string() + ": not a dataset manifest");
    if (ds.manifest.at("version") != kVersion)
      throw data_error(mpath.string() + ": unsupported dataset version " + ds.manifest.at("version").dump());
    joints = ds.manifest.at("joint_count").get<int>();
    entries = ds.manifest.at("samples").get<std::vector<nlohmann::json>>();
    if (ds.manifest.at("count").get<std::size_t>() != entries.size())
      throw data_error(mpath.string() + ": count does not match the sample list");
  } catch (const nlohmann::json::exception& e) {
    throw data_error(mpath.string() + ": " + e.what());
  }
  cams = read_json(dir / "cameras.json");
  if (!cams.is_array() || cams.size() != entries.size())
    throw data_error((dir / "cameras.json").string() + ": expected one camera per sample");

  for (std::size_t i = 0; i < entries.size(); ++i) {
    AgrSample s;
    int P = 0;
    std::string id;
    try {
      id = entries[i].at("id").get<std::string>();
      P = entries[i].at("persons").get<int>();
      s.sigma2d = entries[i].at("sigma2d").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw data_error(mpath.string() + ": sample " + std::to_string(i) + ": " + e.what());
    }
    s.camera = camera_from_json(cams[i]);
    const std::string base = (dir / "samples" / id).string();
    s.heatmaps = read_tensor<float>(base + "_heatmaps.agrt");
    s.box_map = read_tensor<float>(base + "_box.agrt");
    if (s.heatmaps.rank() != 3 || int(s.heatmaps.dim(0)) != joints || s.box_map.rank() != 3 ||
        s.box_map.dim(0) != 4 || s.box_map.dim(1) != s.heatmaps.dim(1) || s.box_map.dim(2) != s.heatmaps.dim(2))
      throw data_error(base + ": heatmap/box shapes disagree with the manifest");
    if (P > 0) {
      const auto depth = read_tensor<double>(base + "_depth.agrt");
      const auto roots = read_tensor<double>(base + "_roots.agrt");
      const auto poses = read_tensor<double>(base + "_poses.agrt");
      if (depth.dims() != Shape{std::size_t(P)} || roots.dims() != Shape{std::size_t(P), 2} ||
          poses.dims() != Shape{std::size_t(P), std::size_t(joints), 3})
        throw data_error(base + ": per-person tensors disagree with the manifest person count " + std::to_string(P));
      for (int p = 0; p < P; ++p) {
        s.depth_targets.push_back(depth[p]);
        s.root_pixels.push_back({int(roots[2 * p]), int(roots[2 * p + 1])});
        Pose3D pose;
        for (int k = 0; k < joints; ++k) pose.joints.push_back({poses.at(p, k, 0), poses.at(p, k, 1), poses.at(p, k, 2)});
        s.gt_poses.push_back(std::move(pose));
      }
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace agrpose::synth
