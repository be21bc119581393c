#include "agrpose/pipeline/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace agrpose::pipeline {

using nlohmann::json;

const char* projection_name(Projection p) { return p == Projection::Gated ? "gated" : "naive"; }

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

[[noreturn]] void type_error(const std::string& path, const char* what) {
  throw config_error("config '" + path + "': expected " + what);
}

json encode(double v) { return v; }
json encode(int v) { return v; }
json encode(std::uint64_t v) { return v; }
json encode(bool v) { return v; }
json encode(const std::string& v) { return v; }
json encode(Vec3 v) { return json::array({v.x, v.y, v.z}); }
json encode(synth::Range r) { return json::array({r.lo, r.hi}); }
json encode(const std::array<int, 3>& a) { return json::array({a[0], a[1], a[2]}); }
json encode(const std::vector<int>& v) { return v; }
json encode(const std::vector<double>& v) { return v; }
json encode(Projection p) { return projection_name(p); }

void decode(const json& j, double& out, const std::string& path) {
  if (!j.is_number()) type_error(path, "a number");
  out = j.get<double>();
}
void decode(const json& j, int& out, const std::string& path) {
  if (!j.is_number_integer()) type_error(path, "an integer");
  const auto v = j.get<std::int64_t>();
  if (v < INT32_MIN || v > INT32_MAX) type_error(path, "an integer in 32-bit range");
  out = int(v);
}
void decode(const json& j, std::uint64_t& out, const std::string& path) {
  if (!j.is_number_unsigned()) type_error(path, "a non-negative integer");
  out = j.get<std::uint64_t>();
}
void decode(const json& j, bool& out, const std::string& path) {
  if (!j.is_boolean()) type_error(path, "a boolean");
  out = j.get<bool>();
}
void decode(const json& j, std::string& out, const std::string& path) {
  if (!j.is_string()) type_error(path, "a string");
  out = j.get<std::string>();
}
void decode(const json& j, Vec3& out, const std::string& path) {
  if (!j.is_array() || j.size() != 3) type_error(path, "an array of 3 numbers");
  for (int a = 0; a < 3; ++a) decode(j[a], out[a], path + "[" + std::to_string(a) + "]");
}
void decode(const json& j, synth::Range& out, const std::string& path) {
  if (!j.is_array() || j.size() != 2) type_error(path, "an array [lo, hi]");
  decode(j[0], out.lo, path + "[0]");
  decode(j[1], out.hi, path + "[1]");
}
void decode(const json& j, std::array<int, 3>& out, const std::string& path) {
  if (!j.is_array() || j.size() != 3) type_error(path, "an array of 3 integers");
  for (int a = 0; a < 3; ++a) decode(j[a], out[a], path + "[" + std::to_string(a) + "]");
}
template <class T>
void decode(const json& j, std::vector<T>& out, const std::string& path) {
  if (!j.is_array()) type_error(path, "an array");
  out.assign(j.size(), T{});
  for (std::size_t i = 0; i < j.size(); ++i) decode(j[i], out[i], path + "[" + std::to_string(i) + "]");
}
void decode(const json& j, Projection& out, const std::string& path) {
  if (j == "gated")
    out = Projection::Gated;
  else if (j == "naive")
    out = Projection::Naive;
  else
    type_error(path, "\"gated\" or \"naive\"");
}

class Writer {
 public:
  json j = json::object();

  template <class T>
  void field(const char* key, const T& v) {
    j[key] = encode(v);
  }
  template <class F>
  void object(const char* key, F&& f) {
    Writer w;
    f(w);
    j[key] = std::move(w.j);
  }
};

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) type_error(path_.empty() ? "<root>" : path_, "an object");
  }

  template <class T>
  void field(const char* key, T& v) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    decode(j_.at(key), v, join(path_, key));
  }
  template <class F>
  void object(const char* key, F&& f) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    Reader r(j_.at(key), join(path_, key));
    f(r);
    r.finish();
  }
  void finish() const {
    for (const auto& [k, _] : j_.items())
      if (!seen_.count(k)) throw config_error("unknown config key '" + join(path_, k) + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class V, class S>
void visit_family(V& v, S& f) {
  v.field("angle_jitter", f.angle_jitter);
  v.field("sitting_fraction", f.sitting_fraction);
}

template <class V, class C>
void visit(V& v, C& c) {
  v.object("skeleton", [&](V& s) { s.field("stature", c.stature); });
  v.object("grid", [&](V& g) {
    g.object("coarse", [&](V& o) {
      o.field("center", c.coarse.center);
      o.field("extent", c.coarse.extent);
      o.field("dims", c.coarse.dims);
    });
    g.object("fine", [&](V& o) {
      o.field("extent", c.fine.extent);
      o.field("dims", c.fine.dims);
    });
  });
  v.object("data", [&](V& d) {
    auto& s = c.data.train;
    d.field("train_count", s.count);
    d.field("train_seed", s.seed);
    d.field("test_count", c.data.test_count);
    d.field("test_seed", c.data.test_seed);
    d.field("min_people", s.min_people);
    d.field("max_people", s.max_people);
    d.object("bounds", [&](V& b) {
      b.field("min", s.bounds.min);
      b.field("max", s.bounds.max);
    });
    d.field("ground_snap", s.ground_snap);
    d.field("min_sep", s.min_sep);
    d.field("max_retries", s.max_retries);
    d.field("sigma2d", s.sigma2d);
    d.object("camera", [&](V& k) {
      k.field("focal", s.camera.focal);
      k.field("theta", s.camera.theta);
      k.field("yaw", s.camera.yaw);
      k.field("distance", s.camera.distance);
      k.field("height", s.camera.height);
      k.field("aim", s.camera.aim);
      k.field("target", s.camera.target);
      k.field("width", s.camera.width);
      k.field("height_px", s.camera.height_px);
    });
    d.object("poses", [&](V& p) { visit_family(p, s.poses); });
    d.object("box", [&](V& b) {
      b.field("pad_px", s.box.pad_px);
      b.field("fill_radius", s.box.fill_radius);
    });
    d.object("noise", [&](V& n) {
      n.field("heatmap_jitter_px", s.noise.heatmap_jitter_px);
      n.field("amplitude", s.noise.amplitude);
      n.field("false_positive_rate", s.noise.false_positive_rate);
      n.field("box_sigma_px", s.noise.box_sigma_px);
      n.field("depth_sigma_mm", s.noise.depth_sigma_mm);
      n.field("joint_dropout", s.noise.joint_dropout);
    });
  });
  v.object("model", [&](V& m) {
    m.field("de_channels", c.model.de_channels);
    m.field("de_dilations", c.model.de_dilations);
    m.field("ren_channels", c.model.ren_channels);
    m.field("pen_channels", c.model.pen_channels);
    m.field("ren_dilations", c.model.ren_dilations);
    m.field("pen_dilations", c.model.pen_dilations);
    m.field("depth_min", c.model.depth_range.min);
    m.field("depth_max", c.model.depth_range.max);
    m.field("depth_ref_focal", c.model.depth_range.ref_focal);
  });
  v.object("train", [&](V& t) {
    t.field("lr", c.train.lr);
    t.field("cosine_lr", c.train.cosine_lr);
    t.field("epochs", c.train.epochs);
    t.field("batch", c.train.batch);
    t.field("w_depth", c.train.w_depth);
    t.field("w_ren", c.train.w_ren);
    t.field("w_pen", c.train.w_pen);
    t.field("teacher_forcing", c.train.teacher_forcing);
    t.field("gate_predicted_depth", c.train.gate_predicted_depth);
    t.field("fine_jitter_mm", c.train.fine_jitter_mm);
    t.field("fine_ray_jitter_mm", c.train.fine_ray_jitter_mm);
    t.field("gate_sigma", c.train.gate_sigma);
    t.field("root_sigma_vox", c.train.root_sigma_vox);
    t.field("pen_persons_per_step", c.train.pen_persons_per_step);
    t.field("mirror_augment", c.train.mirror_augment);
    t.field("projection", c.train.projection);
    t.field("seed", c.train.seed);
  });
  v.object("eval", [&](V& e) {
    e.field("match_max_dist", c.eval.metrics.match_max_dist);
    e.field("match_2d", c.eval.metrics.match_2d);
    e.field("match_max_px", c.eval.metrics.match_max_px);
    e.field("pck_abs_mm", c.eval.metrics.pck_abs_mm);
    e.field("pck_root_mm", c.eval.metrics.pck_root_mm);
    e.field("peak_threshold", c.eval.detect.peak_threshold);
    e.field("peak_radius_px", c.eval.detect.nms_radius_px);
    e.field("max_detections", c.eval.detect.max_people);
    e.field("nms_radius", c.eval.nms.radius);
    e.field("nms_threshold", c.eval.nms.threshold);
    e.field("max_people", c.eval.nms.max_people);
  });
  v.object("protocol", [&](V& p) {
    p.field("train_count", c.protocol.train_count);
    p.field("test_count", c.protocol.test_count);
    p.field("epochs", c.protocol.epochs);
    p.field("use_pen", c.protocol.use_pen);
    p.field("view_theta_deg", c.protocol.view_theta_deg);
    p.field("view_focal", c.protocol.view_focal);
    p.field("random_theta_deg", c.protocol.random_theta_deg);
    p.field("include_diagonal", c.protocol.include_diagonal);
    p.object("family_a", [&](V& f) { visit_family(f, c.protocol.family_a); });
    p.object("family_b", [&](V& f) { visit_family(f, c.protocol.family_b); });
  });
  v.object("paths", [&](V& p) {
    p.field("run_dir", c.paths.run_dir);
    p.field("dataset", c.paths.dataset);
  });
}

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw config_error("config '" + path + "': " + what);
}

void require_range(synth::Range r, const std::string& path) {
  require(std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo <= r.hi, path, "needs finite lo <= hi");
}

}  // namespace

json config_to_json(const RunConfig& cfg) {
  Writer w;
  visit(w, cfg);
  return w.j;
}

RunConfig config_from_json(const json& j) {
  RunConfig cfg;
  Reader r(j, "");
  visit(r, cfg);
  r.finish();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw config_error("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

RunConfig apply_overrides(const RunConfig& cfg, const std::vector<std::string>& overrides) {
  json j = config_to_json(cfg);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw config_error("override '" + o + "' is not of the form key=value");
    const std::string key = o.substr(0, eq), text = o.substr(eq + 1);
    json value;
    try {
      value = json::parse(text);
    } catch (const json::exception&) {
      value = text;
    }
    json* node = &j;
    std::stringstream ss(key);
    std::string part, path;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      path = join(path, parts[i]);
      if (!node->is_object() || !node->contains(parts[i])) throw config_error("unknown config key '" + path + "'");
      node = &(*node)[parts[i]];
    }
    if (node->is_object()) throw config_error("config '" + key + "' is a section, not a value");
    *node = value;
  }
  return config_from_json(j);
}

void validate_config(const RunConfig& c) {
  require(c.stature > 0 && std::isfinite(c.stature), "skeleton.stature", "must be positive");
  try {
    validate_grid(c.coarse.grid());
  } catch (const Error& e) {
    throw config_error(std::string("config 'grid.coarse': ") + e.what());
  }
  require(c.fine.extent > 0, "grid.fine.extent", "must be positive");
  require(c.fine.dims >= 4, "grid.fine.dims", "must be at least 4");
  try {
    synth::validate_synth(c.data.train);
    synth::validate_synth(c.data.test());
  } catch (const Error& e) {
    throw config_error(std::string("config 'data': ") + e.what());
  }
  require(c.model.de_channels >= 1, "model.de_channels", "must be >= 1");
  require(!c.model.de_dilations.empty(), "model.de_dilations", "must not be empty");
  for (int d : c.model.de_dilations) require(d >= 1, "model.de_dilations", "entries must be >= 1");
  require(c.model.ren_channels >= 1, "model.ren_channels", "must be >= 1");
  require(c.model.pen_channels >= 1, "model.pen_channels", "must be >= 1");
  for (const auto& [name, dil] : {std::pair{"model.ren_dilations", &c.model.ren_dilations},
                                  std::pair{"model.pen_dilations", &c.model.pen_dilations}}) {
    require(dil->size() == 3, name, "needs one entry per conv3d layer (3)");
    for (int d : *dil) require(d >= 1, name, "entries must be >= 1");
  }
  require(c.model.depth_range.min > 0 && c.model.depth_range.min < c.model.depth_range.max, "model.depth_min",
          "needs 0 < depth_min < depth_max");
  require(c.model.depth_range.ref_focal >= 0, "model.depth_ref_focal", "must be >= 0");
  require(c.train.lr > 0, "train.lr", "must be positive");
  require(c.train.epochs >= 0, "train.epochs", "must be >= 0");
  require(c.train.batch >= 1, "train.batch", "must be >= 1");
  require(c.train.w_depth >= 0 && c.train.w_ren >= 0 && c.train.w_pen >= 0, "train.w_*", "weights must be >= 0");
  require(c.train.fine_jitter_mm >= 0, "train.fine_jitter_mm", "must be >= 0");
  require(c.train.fine_ray_jitter_mm >= 0, "train.fine_ray_jitter_mm", "must be >= 0");
  require(c.train.gate_sigma > 0, "train.gate_sigma", "must be positive");
  require(c.train.root_sigma_vox > 0, "train.root_sigma_vox", "must be positive");
  require(c.train.pen_persons_per_step >= 0, "train.pen_persons_per_step", "must be >= 0");
  require(c.eval.metrics.match_max_dist > 0, "eval.match_max_dist", "must be positive");
  require(c.eval.metrics.match_max_px > 0, "eval.match_max_px", "must be positive");
  require(c.eval.metrics.pck_abs_mm > 0 && c.eval.metrics.pck_root_mm > 0, "eval.pck_*", "thresholds must be positive");
  require(c.eval.detect.nms_radius_px >= 0, "eval.peak_radius_px", "must be >= 0");
  require(c.eval.detect.max_people >= 1, "eval.max_detections", "must be >= 1");
  require(c.eval.nms.radius >= 1, "eval.nms_radius", "must be >= 1");
  require(c.eval.nms.max_people >= 1, "eval.max_people", "must be >= 1");
  require(c.protocol.train_count >= 1 && c.protocol.test_count >= 1, "protocol.*_count", "must be >= 1");
  require(c.protocol.epochs >= 0, "protocol.epochs", "must be >= 0");
  require(c.protocol.view_theta_deg.size() >= 2, "protocol.view_theta_deg", "needs at least two views");
  require(c.protocol.view_focal > 0, "protocol.view_focal", "must be positive");
  require_range(c.protocol.random_theta_deg, "protocol.random_theta_deg");
  require(!c.paths.run_dir.empty(), "paths.run_dir", "must not be empty");
}

std::string config_hash(const RunConfig& cfg) {
  auto j = config_to_json(cfg);
  j.erase("paths");
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace agrpose::pipeline
