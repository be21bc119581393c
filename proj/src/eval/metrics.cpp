#include "agrpose/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

#include "agrpose/core/error.hpp"

namespace agrpose::eval {

MatchResult match_by_distance(const std::vector<std::vector<double>>& dist, double max_dist) {
  if (!(max_dist > 0)) throw config_error("matching distance must be positive");
  const int G = int(dist.size());
  const int P = G > 0 ? int(dist[0].size()) : 0;
  std::vector<std::tuple<double, int, int>> cand;
  for (int g = 0; g < G; ++g) {
    if (int(dist[g].size()) != P) throw data_error("distance matrix is ragged");
    for (int p = 0; p < P; ++p)
      if (dist[g][p] <= max_dist) cand.emplace_back(dist[g][p], g, p);
  }
  std::sort(cand.begin(), cand.end());
  std::vector<bool> used_g(G), used_p(P);
  MatchResult m;
  for (const auto& [d, g, p] : cand) {
    if (used_g[g] || used_p[p]) continue;
    used_g[g] = used_p[p] = true;
    m.pairs.emplace_back(g, p);
  }
  std::sort(m.pairs.begin(), m.pairs.end());
  for (int g = 0; g < G; ++g)
    if (!used_g[g]) m.unmatched_gt.push_back(g);
  for (int p = 0; p < P; ++p)
    if (!used_p[p]) m.unmatched_pred.push_back(p);
  return m;
}

namespace {

MatchResult finish(MatchResult m, std::size_t preds) {
  std::vector<bool> used(preds);
  for (const auto& [g, p] : m.pairs) used[p] = true;
  m.unmatched_pred.clear();
  for (std::size_t p = 0; p < preds; ++p)
    if (!used[p]) m.unmatched_pred.push_back(int(p));
  return m;
}

}  // namespace

MatchResult match_people(const std::vector<Vec3>& gt, const std::vector<Vec3>& pred, double max_dist) {
  std::vector<std::vector<double>> d(gt.size(), std::vector<double>(pred.size()));
  for (std::size_t g = 0; g < gt.size(); ++g)
    for (std::size_t p = 0; p < pred.size(); ++p) d[g][p] = distance(gt[g], pred[p]);
  return finish(match_by_distance(d, max_dist), pred.size());
}

MatchResult match_people_2d(const std::vector<Vec3>& gt, const std::vector<Vec3>& pred, const Camera& cam,
                            double max_px) {
  constexpr double kBehind = 1e300;
  auto uv = [&](Vec3 p) -> std::pair<double, double> {
    if (auto pr = try_project(cam, p)) return {pr->u, pr->v};
    return {kBehind, kBehind};
  };
  std::vector<std::vector<double>> d(gt.size(), std::vector<double>(pred.size()));
  for (std::size_t g = 0; g < gt.size(); ++g) {
    const auto a = uv(gt[g]);
    for (std::size_t p = 0; p < pred.size(); ++p) {
      const auto b = uv(pred[p]);
      d[g][p] = std::hypot(a.first - b.first, a.second - b.second);
    }
  }
  return finish(match_by_distance(d, max_px), pred.size());
}

std::optional<RootError> mrpe(const MatchResult& m, const std::vector<Vec3>& gt, const std::vector<Vec3>& pred) {
  if (m.pairs.empty()) return std::nullopt;
  RootError e;
  for (const auto& [g, p] : m.pairs) {
    e.mrpe += distance(gt.at(g), pred.at(p));
    e.mrpe_z += std::abs(gt.at(g).z - pred.at(p).z);
  }
  e.mrpe /= double(m.pairs.size());
  e.mrpe_z /= double(m.pairs.size());
  return e;
}

std::optional<double> mpjpe(const MatchResult& m, const std::vector<Pose3D>& gt, const std::vector<Pose3D>& pred,
                            bool align_root, int root) {
  if (m.pairs.empty()) return std::nullopt;
  double sum = 0;
  std::size_t n = 0;
  for (const auto& [g, p] : m.pairs) {
    const auto& a = gt.at(g).joints;
    const auto& b = pred.at(p).joints;
    if (a.size() != b.size()) throw data_error("mpjpe: poses have different joint counts");
    const Vec3 ra = align_root ? a.at(root) : Vec3{}, rb = align_root ? b.at(root) : Vec3{};
    for (std::size_t k = 0; k < a.size(); ++k, ++n) sum += distance(a[k] - ra, b[k] - rb);
  }
  return sum / double(n);
}

std::optional<PckResult> pck(const MatchResult& m, const std::vector<Pose3D>& gt, const std::vector<Pose3D>& pred,
                             double thresh_abs, double thresh_root, Population population, int root) {
  if (!(thresh_abs > 0) || !(thresh_root > 0)) throw config_error("PCK thresholds must be positive");
  std::size_t good = 0, total = 0, roots_good = 0;
  for (const auto& [g, p] : m.pairs) {
    const auto& a = gt.at(g).joints;
    const auto& b = pred.at(p).joints;
    if (a.size() != b.size()) throw data_error("pck: poses have different joint counts");
    for (std::size_t k = 0; k < a.size(); ++k, ++total) good += distance(a[k], b[k]) <= thresh_abs;
    roots_good += distance(a.at(root), b.at(root)) <= thresh_root;
  }
  if (population == Population::All)
    for (int g : m.unmatched_gt) total += gt.at(g).joints.size();
  if (total == 0) return std::nullopt;
  PckResult r;
  r.pck_abs = 100.0 * double(good) / double(total);
  r.pck_root = m.pairs.empty() ? 0.0 : 100.0 * double(roots_good) / double(m.pairs.size());
  return r;
}

void EvalSet::add_scene(const Camera& cam, const std::vector<Pose3D>& gt, const std::vector<Pose3D>& pred,
                        const std::vector<Vec3>& alt_roots, const EvalOptions& opt) {
  if (!alt_roots.empty() && alt_roots.size() != pred.size())
    throw data_error("alternative roots must be given for every prediction");
  if (alt_roots.empty() && !pred.empty()) has_alt_ = false;

  auto to_cam = [&](const Pose3D& p) {
    Pose3D c;
    for (const auto& j : p.joints) c.joints.push_back(cam.to_camera(j));
    return c;
  };
  std::vector<Vec3> gr, pr;
  for (const auto& p : gt) gr.push_back(p.joints.at(root_));
  for (const auto& p : pred) pr.push_back(p.joints.at(root_));
  const MatchResult m = opt.match_2d ? match_people_2d(gr, pr, cam, opt.match_max_px)
                                     : match_people(gr, pr, opt.match_max_dist);

  const int g0 = int(gt_.size()), p0 = int(pred_.size());
  for (const auto& [g, p] : m.pairs) matches_.pairs.emplace_back(g0 + g, p0 + p);
  for (int g : m.unmatched_gt) matches_.unmatched_gt.push_back(g0 + g);
  for (int p : m.unmatched_pred) matches_.unmatched_pred.push_back(p0 + p);
  for (const auto& p : gt) gt_.push_back(to_cam(p));
  for (const auto& p : pred) pred_.push_back(to_cam(p));
  for (std::size_t i = 0; i < pred.size(); ++i) alt_.push_back(alt_roots.empty() ? Vec3{} : cam.to_camera(alt_roots[i]));
}

std::vector<Vec3> EvalSet::gt_roots() const {
  std::vector<Vec3> r;
  for (const auto& p : gt_) r.push_back(p.joints.at(root_));
  return r;
}

std::vector<Vec3> EvalSet::pred_roots() const {
  std::vector<Vec3> r;
  for (const auto& p : pred_) r.push_back(p.joints.at(root_));
  return r;
}

MetricsReport compute_metrics(const EvalSet& set, const EvalOptions& opt) {
  MetricsReport r;
  const auto& m = set.matches();
  r.gt_count = int(set.gt().size());
  r.pred_count = int(set.pred().size());
  r.matched = int(m.pairs.size());
  if (auto e = mrpe(m, set.gt_roots(), set.pred_roots())) {
    r.mrpe = e->mrpe;
    r.mrpe_z = e->mrpe_z;
  }
  if (set.has_alt())
    if (auto e = mrpe(m, set.gt_roots(), set.alt_roots())) {
      r.alt_mrpe = e->mrpe;
      r.alt_mrpe_z = e->mrpe_z;
    }
  r.mpjpe_abs = mpjpe(m, set.gt(), set.pred(), false, set.root());
  r.mpjpe_rel = mpjpe(m, set.gt(), set.pred(), true, set.root());
  if (auto p = pck(m, set.gt(), set.pred(), opt.pck_abs_mm, opt.pck_root_mm, Population::Matched, set.root());
      p && r.matched > 0) {
    r.pck_abs = p->pck_abs;
    r.pck_root = p->pck_root;
  }
  if (auto p = pck(m, set.gt(), set.pred(), opt.pck_abs_mm, opt.pck_root_mm, Population::All, set.root()))
    r.pck_abs_all = p->pck_abs;
  return r;
}

nlohmann::json report_to_json(const MetricsReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"mrpe", opt(r.mrpe)},
          {"mrpe_z", opt(r.mrpe_z)},
          {"mpjpe_abs", opt(r.mpjpe_abs)},
          {"mpjpe_rel", opt(r.mpjpe_rel)},
          {"pck_abs", opt(r.pck_abs)},
          {"pck_abs_all", opt(r.pck_abs_all)},
          {"pck_root", opt(r.pck_root)},
          {"coarse_mrpe", opt(r.alt_mrpe)},
          {"coarse_mrpe_z", opt(r.alt_mrpe_z)},
          {"gt_count", r.gt_count},
          {"pred_count", r.pred_count},
          {"matched", r.matched}};
}

std::vector<CsvRow> report_rows(const MetricsReport& r, const std::string& protocol, const std::string& cell_id,
                                const std::string& train_tag, const std::string& test_tag) {
  std::vector<CsvRow> rows;
  auto add = [&](const char* name, const std::optional<double>& v, int count) {
    if (v) rows.push_back({protocol, cell_id, train_tag, test_tag, name, *v, count});
  };
  // Always present, so every evaluated cell appears in the CSV even when nothing matched.
  rows.push_back({protocol, cell_id, train_tag, test_tag, "matched", double(r.matched), r.gt_count});
  add("mrpe", r.mrpe, r.matched);
  add("mrpe_z", r.mrpe_z, r.matched);
  add("mpjpe_abs", r.mpjpe_abs, r.matched);
  add("mpjpe_rel", r.mpjpe_rel, r.matched);
  add("pck_abs", r.pck_abs, r.matched);
  add("pck_abs_all", r.pck_abs_all, r.gt_count);
  add("pck_root", r.pck_root, r.matched);
  add("coarse_mrpe", r.alt_mrpe, r.matched);
  add("coarse_mrpe_z", r.alt_mrpe_z, r.matched);
  return rows;
}

void write_csv(const std::filesystem::path& path, const std::vector<CsvRow>& rows) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write " + path.string());
  out << kCsvHeader << '\n';
  char buf[64];
  for (const auto& r : rows) {
    for (const auto* s : {&r.protocol, &r.cell_id, &r.train_tag, &r.test_tag, &r.metric})
      if (s->find_first_of(",\n\"") != std::string::npos)
        throw data_error("CSV field '" + *s + "' contains a separator");
    std::snprintf(buf, sizeof buf, "%.10g", r.value);
    out << r.protocol << ',' << r.cell_id << ',' << r.train_tag << ',' << r.test_tag << ',' << r.metric << ',' << buf
        << ',' << r.count << '\n';
  }
  if (!out) throw data_error("failed writing " + path.string());
}

std::vector<CsvRow> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw data_error(path.string() + ": missing CSV header");
  std::vector<CsvRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 7) throw data_error(path.string() + ":" + std::to_string(lineno) + ": expected 7 fields");
    try {
      rows.push_back({f[0], f[1], f[2], f[3], f[4], std::stod(f[5]), std::stoi(f[6])});
    } catch (const std::exception&) {
      throw data_error(path.string() + ":" + std::to_string(lineno) + ": bad number");
    }
  }
  return rows;
}

}  // namespace agrpose::eval
