#pragma once

#include <string>
#include <vector>

#include "agrpose/eval/metrics.hpp"
#include "agrpose/pipeline/model.hpp"
#include "agrpose/synth/agr.hpp"

namespace agrpose::pipeline {

/// What produces the predictions being scored.
enum class Predictor {
  Model,     // detect -> gate -> REN -> NMS -> PEN
  RootOnly,  // the same without PEN: coarse roots only
  OracleGt,  // ground truth passed through as predictions
  Midrange,  // 2D detections back-projected at the middle of the depth range
  Tbs,       // 2D detections back-projected at the box-size analytic depth
  DepthOnly, // 2D detections back-projected at the depth estimator's output
};

const char* predictor_name(Predictor p);
Predictor predictor_from_name(const std::string& name);

/// Predictors without a pose stage only carry meaningful roots.
bool predicts_poses(Predictor p);

struct ScenePrediction {
  std::vector<synth::Pose3D> poses;  // world frame
  std::vector<Vec3> coarse_roots;    // before refinement (equal to the roots for root-only predictors)
  std::vector<double> confidence;
};

ScenePrediction predict_scene(const Model& model, const synth::AgrSample& sample, Predictor predictor);

struct EvalResult {
  eval::MetricsReport report;
  std::vector<ScenePrediction> predictions;
};

/// Scores every scene; pose metrics are dropped for root-only predictors.
EvalResult evaluate(const Model& model, const std::vector<synth::AgrSample>& samples, Predictor predictor);

nlohmann::json predictions_to_json(const std::vector<ScenePrediction>& preds);

}  // namespace agrpose::pipeline
