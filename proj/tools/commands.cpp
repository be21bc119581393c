#include "commands.hpp"

#include <omp.h>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "agrpose/pipeline/config.hpp"
#include "agrpose/pipeline/gradcheck_suite.hpp"
#include "agrpose/pipeline/infer.hpp"
#include "agrpose/pipeline/protocol.hpp"
#include "agrpose/pipeline/train.hpp"

namespace agrpose::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace agrpose::pipeline;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
};

// "--a.b=value" flags left over by the parser become config overrides.
std::vector<std::string> collect_overrides(const std::vector<std::string>& extras) {
  std::vector<std::string> out;
  for (const auto& e : extras) {
    if (e.rfind("--", 0) != 0 || e.find('=') == std::string::npos || e.find('.') == std::string::npos)
      throw config_error("unrecognised argument '" + e + "' (config overrides look like --section.key=value)");
    out.push_back(e.substr(2));
  }
  return out;
}

RunConfig resolve_config(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_config(c.config_path);
  cfg = apply_overrides(cfg, c.overrides);
  validate_config(cfg);
  return cfg;
}

fs::path run_dir(const RunConfig& cfg) { return cfg.paths.run_dir; }
fs::path dataset_dir(const RunConfig& cfg) {
  return cfg.paths.dataset.empty() ? run_dir(cfg) / "data" : fs::path(cfg.paths.dataset);
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  if (!out) throw data_error("cannot write " + path.string());
}

void write_resolved_config(const RunConfig& cfg) { write_json(run_dir(cfg) / "config.json", config_to_json(cfg)); }

synth::Dataset load_split(const RunConfig& cfg, const std::string& split, const synth::SkeletonSpec& skel) {
  const fs::path dir = dataset_dir(cfg) / split;
  if (!fs::exists(dir / "manifest.json"))
    throw data_error("no dataset at " + dir.string() + " (run `agrpose synth` with the same config first)");
  auto ds = synth::read_dataset(dir);
  const auto& meta = ds.manifest.value("meta", json::object());
  if (meta.contains("skeleton")) {
    const auto stored = synth::skeleton_from_json(meta.at("skeleton"));
    if (stored.names != skel.names || stored.parents != skel.parents)
      throw data_error("skeleton mismatch between " + dir.string() + " and the configured skeleton");
  }
  return ds;
}

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  const auto skel = synth::default_skeleton(cfg.stature);
  const json data_cfg = config_to_json(cfg).at("data");
  for (const std::string split : {"train", "test"}) {
    const auto sc = split == "train" ? cfg.data.train : cfg.data.test();
    const auto samples = synth::generate_scenes(sc, skel, 0, sc.count);
    const json meta = {{"split", split},
                       {"seed", sc.seed},
                       {"config_hash", config_hash(cfg)},
                       {"skeleton", synth::skeleton_to_json(skel)},
                       {"synth", data_cfg}};
    synth::write_dataset(dataset_dir(cfg) / split, samples, meta);
    out << "wrote " << samples.size() << " " << split << " scenes to " << (dataset_dir(cfg) / split).string() << "\n";
  }
  write_resolved_config(cfg);
  return 0;
}

int cmd_train(const RunConfig& cfg, bool resume, std::ostream& out) {
  const auto skel = synth::default_skeleton(cfg.stature);
  const auto ds = load_split(cfg, "train", skel);
  const fs::path ckpt_dir = run_dir(cfg) / "checkpoints";
  Model model(cfg, skel);
  if (resume) {
    const fs::path last = latest_checkpoint(ckpt_dir);
    if (last.empty()) throw data_error("--resume: no checkpoint under " + ckpt_dir.string());
    model = load_checkpoint(last);
    RunConfig stored = model.config;
    stored.train.epochs = cfg.train.epochs;
    if (stored != cfg) throw config_error("--resume: config differs from the checkpoint's (only train.epochs may change)");
    model.config = cfg;
    out << "resuming from " << last.string() << " (epoch " << model.epoch << ")\n";
  }
  write_resolved_config(cfg);
  TrainOptions opt;
  opt.checkpoint_dir = ckpt_dir;
  opt.loss_csv = run_dir(cfg) / "reports" / "losses.csv";
  opt.on_epoch = [&](const EpochLosses& e) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "epoch %3d  total %.4g  depth %.4g  ren %.4g  pen %.4g\n", e.epoch, e.total, e.depth,
                  e.ren, e.pen);
    out << buf << std::flush;
  };
  train_model(model, ds.samples, opt);
  out << "checkpoints in " << ckpt_dir.string() << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg, std::string checkpoint, const std::string& predictor_name_arg, bool oracle,
             const std::string& split, std::ostream& out) {
  if (checkpoint.empty()) {
    const auto last = latest_checkpoint(run_dir(cfg) / "checkpoints");
    if (last.empty()) throw data_error("no checkpoint under " + (run_dir(cfg) / "checkpoints").string());
    checkpoint = last.string();
  }
  Model model = load_checkpoint(checkpoint);
  const auto skel = synth::default_skeleton(cfg.stature);
  check_skeleton(model, skel);
  model.config.eval = cfg.eval;
  const auto ds = load_split(cfg, split, model.skeleton);

  const Predictor main = oracle ? Predictor::OracleGt : predictor_from_name(predictor_name_arg);
  std::vector<Predictor> runs{main};
  if (!oracle)
    for (auto p : {Predictor::RootOnly, Predictor::DepthOnly, Predictor::Tbs, Predictor::Midrange})
      if (p != main) runs.push_back(p);

  json metrics = {{"checkpoint", fs::path(checkpoint).filename().string()},
                  {"epoch", model.epoch},
                  {"config_hash", config_hash(model.config)},
                  {"split", split},
                  {"scenes", ds.samples.size()}};
  std::vector<eval::CsvRow> rows;
  for (auto p : runs) {
    const auto res = evaluate(model, ds.samples, p);
    const auto j = eval::report_to_json(res.report);
    if (p == main) {
      metrics["predictor"] = predictor_name(p);
      metrics["metrics"] = j;
      write_json(run_dir(cfg) / "reports" / "predictions.json", predictions_to_json(res.predictions));
    } else {
      metrics["baselines"][predictor_name(p)] = j;
    }
    const auto r = eval::report_rows(res.report, "eval", predictor_name(p), "run", split);
    rows.insert(rows.end(), r.begin(), r.end());
    char buf[200];
    std::snprintf(buf, sizeof buf, "%-11s MRPE %8.1f  MRPE_z %8.1f  matched %d/%d\n", predictor_name(p),
                  res.report.mrpe.value_or(NAN), res.report.mrpe_z.value_or(NAN), res.report.matched,
                  res.report.gt_count);
    out << buf;
  }
  write_json(run_dir(cfg) / "reports" / "metrics.json", metrics);
  eval::write_csv(run_dir(cfg) / "reports" / "metrics.csv", rows);
  return 0;
}

int cmd_ablate(const RunConfig& cfg, const std::string& protocol, std::ostream& out) {
  if (std::find(kProtocols.begin(), kProtocols.end(), protocol) == kProtocols.end())
    throw config_error("unknown protocol '" + protocol + "' (expected projection, cross_view, random_view or cross_pose)");
  write_resolved_config(cfg);
  ProtocolOptions opt;
  opt.log = [&](const std::string& s) { out << s << "\n" << std::flush; };
  const fs::path dir = run_dir(cfg) / "ablate";
  const auto rows = run_protocol(protocol, cfg, dir, opt);
  out << "wrote " << rows.size() << " rows to " << (dir / (protocol + ".csv")).string() << "\n";
  return 0;
}

int cmd_gradcheck(double eps, double corrupt, std::ostream& out) {
  const double tol = 1e-6;
  const auto lines = run_gradcheck_suite(eps, tol, corrupt);
  bool ok = true;
  for (const auto& l : lines) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%-24s max_rel_err %.3e  (%zu entries)  %s\n", l.name.c_str(), l.max_rel_error,
                  l.checked, l.pass ? "PASS" : "FAIL");
    out << buf;
    ok = ok && l.pass;
  }
  out << (ok ? "all gradient checks passed\n" : "gradient check FAILED\n");
  return ok ? 0 : 4;
}

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Data:
    case ErrorKind::Geometry: return 3;
    case ErrorKind::Numerical: return 4;
  }
  return 1;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Absolute multi-person 3D pose estimation from abstract geometry representations"};
  app.require_subcommand(1);
  int threads = 0;
  bool deterministic = false;
  app.add_option("--threads", threads, "Cap on worker threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
  app.add_flag("--deterministic", deterministic, "Run sequentially");

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON config (defaults apply to missing fields)");
    sub->allow_extras();
  };

  auto* synth_cmd = app.add_subcommand("synth", "Generate train/test datasets");
  add_common(synth_cmd);

  auto* train_cmd = app.add_subcommand("train", "Train the depth estimator, REN and PEN");
  add_common(train_cmd);
  bool resume = false;
  train_cmd->add_flag("--resume", resume, "Continue from the latest checkpoint in the run directory");

  auto* eval_cmd = app.add_subcommand("eval", "Run inference and write metric reports");
  add_common(eval_cmd);
  std::string checkpoint, predictor = "model", split = "test";
  bool oracle = false;
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint directory (default: latest)");
  eval_cmd->add_option("--predictor", predictor, "model, root_only, depth_only, tbs or midrange");
  eval_cmd->add_option("--split", split, "Dataset split")->check(CLI::IsMember({"train", "test"}));
  eval_cmd->add_flag("--oracle-gt", oracle, "Score ground truth as predictions");

  auto* ablate_cmd = app.add_subcommand("ablate", "Run a generalization / ablation protocol");
  add_common(ablate_cmd);
  std::string protocol;
  ablate_cmd->add_option("--protocol", protocol, "projection, cross_view, random_view or cross_pose")->required();

  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every layer and loss");
  double eps = 1e-5, corrupt = 0;
  grad_cmd->add_option("--eps", eps, "Central-difference step");
  grad_cmd->add_option("--corrupt", corrupt, "Scale analytic gradients by (1 + x); harness self-test");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (deterministic) threads = 1;
    if (threads > 0) omp_set_num_threads(threads);
    CLI::App* used = app.get_subcommands().front();
    if (used != grad_cmd) {
      common.overrides = collect_overrides(used->remaining());
    }
    if (used == grad_cmd) return cmd_gradcheck(eps, corrupt, out);
    const RunConfig cfg = resolve_config(common);
    if (used == synth_cmd) return cmd_synth(cfg, out);
    if (used == train_cmd) return cmd_train(cfg, resume, out);
    if (used == eval_cmd) return cmd_eval(cfg, checkpoint, predictor, oracle, split, out);
    return cmd_ablate(cfg, protocol, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace agrpose::cli
