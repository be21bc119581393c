#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "agrpose/eval/metrics.hpp"
#include "agrpose/geometry/grid.hpp"
#include "agrpose/ren/ren.hpp"
#include "agrpose/synth/dataset.hpp"
#include "json.hpp"

namespace agrpose::pipeline {

enum class Projection { Gated, Naive };

const char* projection_name(Projection p);

struct CoarseGridConfig {
  Vec3 center{0, 0, 900};
  Vec3 extent{6000, 6000, 1800};
  std::array<int, 3> dims{40, 40, 12};
  GridSpec grid() const { return GridSpec::centered(center, extent, dims); }
  friend bool operator==(const CoarseGridConfig&, const CoarseGridConfig&) = default;
};

struct FineGridConfig {
  double extent = 2000;  // cube side, mm
  int dims = 32;
  friend bool operator==(const FineGridConfig&, const FineGridConfig&) = default;
};

struct DataConfig {
  synth::SynthConfig train;  // train.count / train.seed describe the training split
  int test_count = 50;
  std::uint64_t test_seed = 2;
  synth::SynthConfig test() const {
    synth::SynthConfig t = train;
    t.count = test_count;
    t.seed = test_seed;
    return t;
  }
  friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

struct ModelConfig {
  int de_channels = 16;
  std::vector<int> de_dilations{1, 2, 4, 8};
  int ren_channels = 8;
  int pen_channels = 8;
  // Per conv3d layer (three each). Dilating the PEN lets it relate the root ray to head and feet.
  std::vector<int> ren_dilations{1, 1, 1};
  std::vector<int> pen_dilations{1, 1, 1};
  ren::DepthRange depth_range;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct TrainConfig {
  double lr = 1e-4;
  bool cosine_lr = false;  // per-epoch cosine decay from lr towards 0 over `epochs`
  int epochs = 20;
  int batch = 1;  // scenes per optimizer step
  double w_depth = 1, w_ren = 1, w_pen = 1;
  bool teacher_forcing = true;  // gate with GT depths and centre fine cubes on jittered GT roots
  bool gate_predicted_depth = false;  // under teacher forcing, gate at the DE's depth instead of the GT depth
  double fine_jitter_mm = 150;  // per-axis std of the fine-cube centre around the GT root
  double fine_ray_jitter_mm = 0; // extra std along the camera ray through the GT root
  double gate_sigma = 200;
  double root_sigma_vox = 1.0;  // width of the 3D root target
  int pen_persons_per_step = 1; // people per scene fed to PEN each step (0 = all)
  bool mirror_augment = true;   // DE sees a left-right mirrored scene half of the time
  Projection projection = Projection::Gated;
  std::uint64_t seed = 11;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct EvalConfig {
  eval::EvalOptions metrics;
  ren::DetectOptions detect;
  ren::NmsOptions nms;
  friend bool operator==(const EvalConfig&, const EvalConfig&) = default;
};

struct ProtocolConfig {
  int train_count = 200;
  int test_count = 50;
  int epochs = 20;
  bool use_pen = false;  // protocol cells train and score the root stage only
  std::vector<double> view_theta_deg{5, 30, 50};
  double view_focal = 100;
  synth::Range random_theta_deg{0, 55};
  bool include_diagonal = true;
  synth::PoseFamily family_a{0.15, 0.0};
  synth::PoseFamily family_b{0.4, 0.5};
  friend bool operator==(const ProtocolConfig&, const ProtocolConfig&) = default;
};

struct PathsConfig {
  std::string run_dir = "runs/default";
  std::string dataset;  // empty: <run_dir>/data
  friend bool operator==(const PathsConfig&, const PathsConfig&) = default;
};

struct RunConfig {
  double stature = 1700;
  CoarseGridConfig coarse;
  FineGridConfig fine;
  DataConfig data;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;
  ProtocolConfig protocol;
  PathsConfig paths;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

nlohmann::json config_to_json(const RunConfig& cfg);

/// Strict parse: missing fields keep their defaults, unknown keys and wrong
/// types are config errors naming the JSON path.
RunConfig config_from_json(const nlohmann::json& j);

RunConfig load_config(const std::filesystem::path& path);

/// Applies "a.b.c=value" overrides (value parsed as JSON, else taken as a string).
RunConfig apply_overrides(const RunConfig& cfg, const std::vector<std::string>& overrides);

/// Range and consistency checks across sections.
void validate_config(const RunConfig& cfg);

/// Stable hash of the serialized config without the paths section, 16 hex digits.
std::string config_hash(const RunConfig& cfg);

}  // namespace agrpose::pipeline
