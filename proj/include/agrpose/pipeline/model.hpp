#pragma once

#include <filesystem>
#include <string>

#include "agrpose/core/net.hpp"
#include "agrpose/pipeline/config.hpp"
#include "agrpose/synth/skeleton.hpp"
#include "json.hpp"

namespace agrpose::pipeline {

NetSpec depth_net_spec(const RunConfig& cfg, int joints);
NetSpec root_net_spec(const RunConfig& cfg, int joints);
NetSpec pose_net_spec(const RunConfig& cfg, int joints);

nlohmann::json netspec_to_json(const NetSpec& spec);
NetSpec netspec_from_json(const nlohmann::json& j);

/// The three trainable stages plus everything needed to run them.
struct Model {
  RunConfig config;
  synth::SkeletonSpec skeleton;
  Network<float> de, ren, pen;
  ParamSet<float> de_params, ren_params, pen_params;
  int epoch = 0;  // completed training epochs

  Model(const RunConfig& cfg, const synth::SkeletonSpec& skel);

  /// Fresh parameters derived from cfg.train.seed.
  void initialize();
  GridSpec coarse_grid() const { return config.coarse.grid(); }
};

/// Directory with model.json and one AGRT file per parameter tensor (value and
/// Adam moments), so training can resume exactly.
void save_checkpoint(const std::filesystem::path& dir, const Model& model);
Model load_checkpoint(const std::filesystem::path& dir);

/// Raises a data error if the checkpoint skeleton differs from `skel`.
void check_skeleton(const Model& model, const synth::SkeletonSpec& skel);

}  // namespace agrpose::pipeline
