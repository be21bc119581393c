#include "agrpose/pipeline/infer.hpp"

#include <algorithm>
#include <cmath>

#include "agrpose/pen/pen.hpp"
#include "agrpose/ren/ren.hpp"

namespace agrpose::pipeline {

using nlohmann::json;

namespace {

constexpr Predictor kAll[] = {Predictor::Model,    Predictor::RootOnly, Predictor::OracleGt,
                              Predictor::Midrange, Predictor::Tbs,      Predictor::DepthOnly};

synth::Pose3D point_pose(Vec3 root, int joints) { return {std::vector<Vec3>(joints, root)}; }

// Pitch below the horizon, from the optical axis.
double camera_pitch(const Camera& cam) { return std::asin(std::clamp(-cam.R.row(2).z, -1.0, 1.0)); }

}  // namespace

const char* predictor_name(Predictor p) {
  switch (p) {
    case Predictor::Model: return "model";
    case Predictor::RootOnly: return "root_only";
    case Predictor::OracleGt: return "oracle_gt";
    case Predictor::Midrange: return "midrange";
    case Predictor::Tbs: return "tbs";
    case Predictor::DepthOnly: return "depth_only";
  }
  return "?";
}

Predictor predictor_from_name(const std::string& name) {
  for (auto p : kAll)
    if (name == predictor_name(p)) return p;
  throw config_error("unknown predictor '" + name + "'");
}

bool predicts_poses(Predictor p) { return p == Predictor::Model || p == Predictor::OracleGt; }

ScenePrediction predict_scene(const Model& model, const synth::AgrSample& s, Predictor predictor) {
  const auto& cfg = model.config;
  const int root = model.skeleton.root;
  const int joints = model.skeleton.joint_count();
  ScenePrediction out;

  if (predictor == Predictor::OracleGt) {
    out.poses = s.gt_poses;
    for (const auto& p : s.gt_poses) {
      out.coarse_roots.push_back(p.joints[root]);
      out.confidence.push_back(1.0);
    }
    return out;
  }

  TensorF depth_map;
  if (predictor == Predictor::Model || predictor == Predictor::RootOnly || predictor == Predictor::DepthOnly)
    depth_map = ren::estimate_depth_map(model.de, model.de_params, s.heatmaps, cfg.model.depth_range, s.camera);
  else
    depth_map = TensorF({1, std::size_t(s.height()), std::size_t(s.width())}, float(cfg.model.depth_range.mid()));
  const auto dets = ren::detect_persons_2d(s.heatmaps, s.box_map, depth_map, root, cfg.eval.detect);

  if (predictor == Predictor::Midrange || predictor == Predictor::Tbs || predictor == Predictor::DepthOnly) {
    const BodyHeights heights = synth::body_heights(model.skeleton, synth::template_pose(model.skeleton));
    for (const auto& d : dets) {
      double depth = d.depth;
      if (predictor == Predictor::Midrange) depth = cfg.model.depth_range.mid();
      if (predictor == Predictor::Tbs) {
        // Box maps are padded on every side; the analytic relation wants the body extent.
        const double h_img = std::max(1.0, d.box.height() - 2 * cfg.data.train.box.pad_px);
        depth = tbs_depth(s.camera.fy, heights, camera_pitch(s.camera), h_img);
      }
      const Vec3 r = backproject(s.camera, d.u, d.v, depth);
      out.poses.push_back(point_pose(r, joints));
      out.coarse_roots.push_back(r);
      out.confidence.push_back(d.confidence);
    }
    return out;
  }

  const GridSpec grid = model.coarse_grid();
  const TensorF volume = cfg.train.projection == Projection::Gated
                             ? ren::build_root_volume(s.heatmaps, dets, grid, s.camera, cfg.train.gate_sigma)
                             : ren::build_naive_volume(s.heatmaps, grid, s.camera);
  const auto root_heatmap = model.ren.forward(model.ren_params, volume).output();
  for (const auto& c : ren::nms_3d(root_heatmap, grid, cfg.eval.nms)) {
    out.coarse_roots.push_back(c.world);
    out.confidence.push_back(c.confidence);
    if (predictor == Predictor::Model)
      out.poses.push_back(
          pen::estimate_person(model.pen, model.pen_params, s.heatmaps, s.camera, c.world, root, cfg.fine.extent).pose);
    else
      out.poses.push_back(point_pose(c.world, joints));
  }
  return out;
}

EvalResult evaluate(const Model& model, const std::vector<synth::AgrSample>& samples, Predictor predictor) {
  EvalResult res;
  eval::EvalSet set(model.skeleton.root);
  for (const auto& s : samples) {
    if (s.joint_count() != model.skeleton.joint_count())
      throw data_error("sample has " + std::to_string(s.joint_count()) + " joints, model expects " +
                       std::to_string(model.skeleton.joint_count()));
    auto pred = predict_scene(model, s, predictor);
    set.add_scene(s.camera, s.gt_poses, pred.poses, pred.coarse_roots, model.config.eval.metrics);
    res.predictions.push_back(std::move(pred));
  }
  res.report = eval::compute_metrics(set, model.config.eval.metrics);
  if (!predicts_poses(predictor)) {
    res.report.mpjpe_abs.reset();
    res.report.mpjpe_rel.reset();
    res.report.pck_abs.reset();
    res.report.pck_abs_all.reset();
  }
  if (predictor != Predictor::Model) {
    res.report.alt_mrpe.reset();
    res.report.alt_mrpe_z.reset();
  }
  return res;
}

json predictions_to_json(const std::vector<ScenePrediction>& preds) {
  json scenes = json::array();
  for (std::size_t i = 0; i < preds.size(); ++i) {
    json people = json::array();
    for (std::size_t p = 0; p < preds[i].poses.size(); ++p) {
      json joints = json::array();
      for (const auto& j : preds[i].poses[p].joints) joints.push_back({j.x, j.y, j.z});
      const Vec3 c = preds[i].coarse_roots[p];
      people.push_back({{"joints", joints}, {"coarse_root", {c.x, c.y, c.z}}, {"confidence", preds[i].confidence[p]}});
    }
    scenes.push_back({{"scene", i}, {"people", people}});
  }
  return scenes;
}

}  // namespace agrpose::pipeline
