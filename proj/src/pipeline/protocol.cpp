#include "agrpose/pipeline/protocol.hpp"

#include <numbers>

#include "agrpose/pipeline/infer.hpp"
#include "agrpose/pipeline/train.hpp"

namespace agrpose::pipeline {

namespace fs = std::filesystem;

namespace {

double rad(double deg) { return deg * std::numbers::pi / 180.0; }

RunConfig cell_base(const RunConfig& base) {
  RunConfig c = base;
  c.data.train.count = base.protocol.train_count;
  c.data.test_count = base.protocol.test_count;
  c.train.epochs = base.protocol.epochs;
  if (!base.protocol.use_pen) c.train.w_pen = 0;
  return c;
}

std::string view_tag(std::size_t v) { return "cam" + std::to_string(v); }

Model trained_cell(const ProtocolCell& cell, const fs::path& out, const ProtocolOptions& opt) {
  const fs::path dir = out / "cells" / cell.name;
  const auto skel = synth::default_skeleton(cell.config.stature);
  if (fs::exists(dir / "model.json")) {
    Model m = load_checkpoint(dir);
    if (m.config == cell.config && m.epoch == cell.config.train.epochs) {
      if (opt.log) opt.log("cell " + cell.name + ": reusing checkpoint");
      return m;
    }
  }
  if (opt.log) opt.log("cell " + cell.name + ": training");
  const auto data = synth::generate_scenes(cell.config.data.train, skel, 0, cell.config.data.train.count);
  Model m(cell.config, skel);
  TrainOptions topt;
  topt.loss_csv = dir / "losses.csv";
  topt.on_epoch = [&](const EpochLosses& e) {
    if (opt.log) opt.log("cell " + cell.name + " epoch " + std::to_string(e.epoch) + " loss " + std::to_string(e.total));
  };
  train_model(m, data, topt);
  save_checkpoint(dir, m);
  return m;
}

std::vector<synth::AgrSample> test_set(const RunConfig& cfg, const synth::SynthConfig& synth_cfg) {
  auto t = synth_cfg;
  t.count = cfg.data.test_count;
  t.seed = cfg.data.test_seed;
  return synth::generate_scenes(t, synth::default_skeleton(cfg.stature), 0, t.count);
}

}  // namespace

synth::SynthConfig view_synth(const RunConfig& base, std::size_t view) {
  auto s = base.data.train;
  const double theta = rad(base.protocol.view_theta_deg.at(view));
  s.camera.focal = {base.protocol.view_focal, base.protocol.view_focal};
  s.camera.theta = {theta, theta};
  return s;
}

std::vector<ProtocolCell> protocol_cells(const std::string& protocol, const RunConfig& base) {
  const RunConfig c0 = cell_base(base);
  std::vector<ProtocolCell> cells;
  if (protocol == "projection") {
    for (auto p : {Projection::Gated, Projection::Naive}) {
      RunConfig c = c0;
      c.train.projection = p;
      cells.push_back({projection_name(p), c});
    }
  } else if (protocol == "cross_view" || protocol == "random_view") {
    if (protocol == "cross_view") {
      for (std::size_t v = 0; v < base.protocol.view_theta_deg.size(); ++v) {
        RunConfig c = c0;
        const auto count = c.data.train.count;
        const auto seed = c.data.train.seed;
        c.data.train = view_synth(c0, v);
        c.data.train.count = count;
        c.data.train.seed = seed;
        cells.push_back({"view_" + view_tag(v), c});
      }
    } else {
      RunConfig c = c0;
      c.data.train.camera.focal = {base.protocol.view_focal, base.protocol.view_focal};
      c.data.train.camera.theta = {rad(base.protocol.random_theta_deg.lo), rad(base.protocol.random_theta_deg.hi)};
      cells.push_back({"view_random", c});
    }
  } else if (protocol == "cross_pose") {
    RunConfig c = c0;
    c.data.train.poses = base.protocol.family_a;
    cells.push_back({"pose_A", c});
  } else {
    throw config_error("unknown protocol '" + protocol + "' (expected projection, cross_view, random_view or cross_pose)");
  }
  return cells;
}

std::vector<eval::CsvRow> run_protocol(const std::string& protocol, const RunConfig& base, const fs::path& out,
                                       const ProtocolOptions& opt) {
  validate_config(base);
  const auto cells = protocol_cells(protocol, base);
  fs::create_directories(out);
  const Predictor predictor = base.protocol.use_pen ? Predictor::Model : Predictor::RootOnly;
  std::vector<eval::CsvRow> rows;
  auto score = [&](const Model& m, const std::vector<synth::AgrSample>& test, const std::string& cell_id,
                   const std::string& train_tag, const std::string& test_tag) {
    const auto r = evaluate(m, test, predictor).report;
    const auto add = eval::report_rows(r, protocol, cell_id, train_tag, test_tag);
    rows.insert(rows.end(), add.begin(), add.end());
    if (opt.log && r.mrpe_z)
      opt.log(cell_id + ": MRPE_z " + std::to_string(*r.mrpe_z) + " mm over " + std::to_string(r.matched) + " matches");
  };

  if (protocol == "projection") {
    const auto test = test_set(cell_base(base), cell_base(base).data.train);
    for (const auto& cell : cells) score(trained_cell(cell, out, opt), test, cell.name, cell.name, "test");
  } else if (protocol == "cross_view" || protocol == "random_view") {
    const RunConfig c0 = cell_base(base);
    std::vector<std::vector<synth::AgrSample>> tests;
    for (std::size_t v = 0; v < base.protocol.view_theta_deg.size(); ++v) tests.push_back(test_set(c0, view_synth(c0, v)));
    if (protocol == "cross_view") {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        const Model m = trained_cell(cells[i], out, opt);
        for (std::size_t j = 0; j < tests.size(); ++j) {
          if (i == j && !base.protocol.include_diagonal) continue;
          score(m, tests[j], view_tag(i) + "_" + view_tag(j), view_tag(i), view_tag(j));
        }
      }
    } else {
      const Model m = trained_cell(cells[0], out, opt);
      for (std::size_t j = 0; j < tests.size(); ++j) score(m, tests[j], "random_" + view_tag(j), "random", view_tag(j));
    }
  } else {
    const RunConfig c0 = cell_base(base);
    auto a = c0.data.train, b = c0.data.train;
    a.poses = base.protocol.family_a;
    b.poses = base.protocol.family_b;
    const Model m = trained_cell(cells[0], out, opt);
    score(m, test_set(c0, a), "A_A", "A", "A");
    score(m, test_set(c0, b), "A_B", "A", "B");
  }
  eval::write_csv(out / (protocol + ".csv"), rows);
  return rows;
}

}  // namespace agrpose::pipeline
