#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "agrpose/pipeline/model.hpp"
#include "agrpose/synth/agr.hpp"

namespace agrpose::pipeline {

struct EpochLosses {
  int epoch = 0;  // 1-based
  double total = 0, depth = 0, ren = 0, pen = 0;  // per-scene means; total is the weighted sum
  int steps = 0;
};

struct TrainOptions {
  std::filesystem::path checkpoint_dir;  // checkpoints/epoch_NNN per epoch; empty to skip
  std::filesystem::path loss_csv;        // empty to skip
  std::function<void(const EpochLosses&)> on_epoch;
};

/// Losses of a single scene, with gradients accumulated into the model's
/// parameter sets (scaled by `grad_scale`).
struct SceneLosses {
  double depth = 0, ren = 0, pen = 0;
};
SceneLosses accumulate_scene(Model& model, const synth::AgrSample& sample, Rng& rng, double grad_scale);

/// Trains from model.epoch up to config.train.epochs. Epoch e shuffles and
/// draws from streams derived from (train.seed, e), so a run resumed from an
/// epoch checkpoint continues exactly as the uninterrupted run would.
std::vector<EpochLosses> train_model(Model& model, const std::vector<synth::AgrSample>& data,
                                     const TrainOptions& opt = {});

void write_losses_csv(const std::filesystem::path& path, const std::vector<EpochLosses>& losses);
std::vector<EpochLosses> read_losses_csv(const std::filesystem::path& path);

/// Highest epoch_NNN directory under `dir`, or empty if none.
std::filesystem::path latest_checkpoint(const std::filesystem::path& dir);

}  // namespace agrpose::pipeline
