#include "agrpose/pipeline/model.hpp"

#include <cmath>
#include <fstream>

#include "agrpose/core/random.hpp"
#include "agrpose/core/tensor_io.hpp"

namespace agrpose::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kCheckpointVersion = 1;
constexpr double kRootPrior = 0.02;

std::size_t u(int v) { return std::size_t(v); }

}  // namespace

NetSpec depth_net_spec(const RunConfig& cfg, int joints) {
  const auto& m = cfg.model;
  NetSpec s{{u(joints), u(cfg.data.train.camera.height_px), u(cfg.data.train.camera.width)}, {}};
  int in = joints;
  for (int d : m.de_dilations) {
    s.layers.push_back(LayerSpec::conv2d(in, m.de_channels, 3, d, 1, d));
    s.layers.push_back(LayerSpec::relu());
    in = m.de_channels;
  }
  s.layers.push_back(LayerSpec::conv2d(in, 1, 3, 1));
  s.layers.push_back(LayerSpec::sigmoid());
  return s;
}

NetSpec root_net_spec(const RunConfig& cfg, int joints) {
  const auto d = cfg.coarse.dims;
  const int c = cfg.model.ren_channels;
  const auto& r = cfg.model.ren_dilations;
  return {{u(joints), u(d[2]), u(d[1]), u(d[0])},
          {LayerSpec::conv3d(joints, c, 3, r[0], 1, r[0]), LayerSpec::relu(), LayerSpec::conv3d(c, c, 3, r[1], 1, r[1]),
           LayerSpec::relu(), LayerSpec::conv3d(c, 1, 3, r[2], 1, r[2]), LayerSpec::sigmoid()}};
}

NetSpec pose_net_spec(const RunConfig& cfg, int joints) {
  const std::size_t n = u(cfg.fine.dims);
  const int c = cfg.model.pen_channels;
  const auto& p = cfg.model.pen_dilations;
  return {{u(joints), n, n, n},
          {LayerSpec::conv3d(joints, c, 3, p[0], 1, p[0]), LayerSpec::relu(), LayerSpec::conv3d(c, c, 3, p[1], 1, p[1]),
           LayerSpec::relu(), LayerSpec::conv3d(c, joints, 3, p[2], 1, p[2]), LayerSpec::softmax()}};
}

json netspec_to_json(const NetSpec& spec) {
  json layers = json::array();
  for (const auto& l : spec.layers)
    layers.push_back({{"kind", layer_kind_name(l.kind)},
                      {"in", l.in_ch},
                      {"out", l.out_ch},
                      {"kernel", l.kernel},
                      {"stride", l.stride},
                      {"padding", l.padding},
                      {"dilation", l.dilation},
                      {"bias", l.bias}});
  return {{"input", spec.input}, {"layers", layers}};
}

NetSpec netspec_from_json(const json& j) {
  NetSpec s;
  try {
    s.input = j.at("input").get<Shape>();
    for (const auto& l : j.at("layers")) {
      LayerSpec ls;
      ls.kind = layer_kind_from_name(l.at("kind").get<std::string>());
      ls.in_ch = l.at("in").get<int>();
      ls.out_ch = l.at("out").get<int>();
      ls.kernel = l.at("kernel").get<int>();
      ls.stride = l.at("stride").get<int>();
      ls.padding = l.at("padding").get<int>();
      ls.dilation = l.at("dilation").get<int>();
      ls.bias = l.at("bias").get<bool>();
      s.layers.push_back(ls);
    }
  } catch (const json::exception& e) {
    throw data_error(std::string("malformed network spec: ") + e.what());
  }
  return s;
}

Model::Model(const RunConfig& cfg, const synth::SkeletonSpec& skel)
    : config(cfg),
      skeleton(skel),
      de(depth_net_spec(cfg, skel.joint_count())),
      ren(root_net_spec(cfg, skel.joint_count())),
      pen(pose_net_spec(cfg, skel.joint_count())) {
  initialize();
}

void Model::initialize() {
  const auto seed = config.train.seed;
  de_params = de.init_params(derive_seed(seed, {1}));
  ren_params = ren.init_params(derive_seed(seed, {2}));
  // Roots occupy a handful of voxels; starting the sigmoid head near that base rate keeps the
  // early squared-error gradient from saturating every voxel to zero.
  const auto head = "L" + std::to_string(ren.spec().layers.size() - 2) + ".bias";
  ren_params.at(head).value.fill(float(std::log(kRootPrior / (1 - kRootPrior))));
  pen_params = pen.init_params(derive_seed(seed, {3}));
  epoch = 0;
}

namespace {

void save_params(const fs::path& dir, const std::string& net, const ParamSet<float>& ps, json& index) {
  for (const auto& p : ps.params()) {
    const std::string stem = net + "." + p.name;
    const std::pair<const char*, const TensorF*> parts[] = {{"value", &p.value}, {"m", &p.m}, {"v", &p.v}};
    for (const auto& [what, t] : parts) {
      const std::string file = stem + "." + what + ".agrt";
      write_tensor(dir / file, *t);
      index[stem + "." + what] = {{"file", file}, {"shape", t->dims()}, {"layer", p.layer}};
    }
  }
}

void load_params(const fs::path& dir, const std::string& net, ParamSet<float>& ps, std::uint64_t step) {
  for (auto& p : ps.params()) {
    const std::string stem = net + "." + p.name;
    auto load = [&](const char* what, TensorF& into) {
      auto t = read_tensor<float>(dir / (stem + "." + what + ".agrt"));
      if (t.dims() != into.dims())
        throw data_error("checkpoint tensor " + stem + "." + what + " has shape " + shape_string(t.dims()) +
                         ", expected " + shape_string(into.dims()));
      into = std::move(t);
    };
    load("value", p.value);
    load("m", p.m);
    load("v", p.v);
    p.grad.fill(0.0f);
  }
  ps.set_step(step);
}

}  // namespace

void save_checkpoint(const fs::path& dir, const Model& model) {
  fs::create_directories(dir);
  json meta = {{"format", "agrpose-checkpoint"},
               {"version", kCheckpointVersion},
               {"epoch", model.epoch},
               {"config", config_to_json(model.config)},
               {"config_hash", config_hash(model.config)},
               {"skeleton", synth::skeleton_to_json(model.skeleton)},
               {"nets",
                {{"de", netspec_to_json(model.de.spec())},
                 {"ren", netspec_to_json(model.ren.spec())},
                 {"pen", netspec_to_json(model.pen.spec())}}},
               {"steps",
                {{"de", model.de_params.step()}, {"ren", model.ren_params.step()}, {"pen", model.pen_params.step()}}}};
  json index = json::object();
  save_params(dir, "de", model.de_params, index);
  save_params(dir, "ren", model.ren_params, index);
  save_params(dir, "pen", model.pen_params, index);
  meta["tensors"] = index;
  std::ofstream out(dir / "model.json");
  out << meta.dump(2) << "\n";
  if (!out) throw data_error("cannot write " + (dir / "model.json").string());
}

Model load_checkpoint(const fs::path& dir) {
  const fs::path path = dir / "model.json";
  std::ifstream in(path);
  if (!in) throw data_error("no checkpoint at " + dir.string() + " (missing model.json)");
  json meta;
  try {
    meta = json::parse(in);
  } catch (const json::exception& e) {
    throw data_error(path.string() + " is not valid JSON: " + e.what());
  }
  if (meta.value("format", "") != "agrpose-checkpoint" || meta.value("version", 0) != kCheckpointVersion)
    throw data_error(path.string() + " is not a supported checkpoint");
  Model model(config_from_json(meta.at("config")), synth::skeleton_from_json(meta.at("skeleton")));
  const auto& nets = meta.at("nets");
  if (netspec_from_json(nets.at("de")) != model.de.spec() || netspec_from_json(nets.at("ren")) != model.ren.spec() ||
      netspec_from_json(nets.at("pen")) != model.pen.spec())
    throw data_error(path.string() + ": network specs do not match the stored config");
  const auto& steps = meta.at("steps");
  load_params(dir, "de", model.de_params, steps.at("de").get<std::uint64_t>());
  load_params(dir, "ren", model.ren_params, steps.at("ren").get<std::uint64_t>());
  load_params(dir, "pen", model.pen_params, steps.at("pen").get<std::uint64_t>());
  model.epoch = meta.at("epoch").get<int>();
  return model;
}

void check_skeleton(const Model& model, const synth::SkeletonSpec& skel) {
  if (model.skeleton.names != skel.names || model.skeleton.parents != skel.parents)
    throw data_error("skeleton mismatch: checkpoint has " + std::to_string(model.skeleton.joint_count()) +
                     " joints, dataset has " + std::to_string(skel.joint_count()) + " (or the trees differ)");
}

}  // namespace agrpose::pipeline
