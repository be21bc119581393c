#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "agrpose/geometry/camera.hpp"
#include "agrpose/synth/skeleton.hpp"
#include "json.hpp"

namespace agrpose::eval {

using synth::Pose3D;

struct MatchResult {
  std::vector<std::pair<int, int>> pairs;  // (gt, pred)
  std::vector<int> unmatched_gt;
  std::vector<int> unmatched_pred;
};

/// Greedy matching on ascending distance (ties by gt then pred index); pairs
/// farther apart than max_dist are left unmatched.
MatchResult match_by_distance(const std::vector<std::vector<double>>& dist, double max_dist);

/// 3D root matching.
MatchResult match_people(const std::vector<Vec3>& gt_roots, const std::vector<Vec3>& pred_roots, double max_dist);

/// Image-plane matching on projected roots (pixels).
MatchResult match_people_2d(const std::vector<Vec3>& gt_roots, const std::vector<Vec3>& pred_roots, const Camera& cam,
                            double max_px);

struct RootError {
  double mrpe = 0;
  double mrpe_z = 0;
};

/// Mean Euclidean and depth-axis root errors over matched pairs. Roots must be
/// given in the camera frame. nullopt when nothing matched.
std::optional<RootError> mrpe(const MatchResult& m, const std::vector<Vec3>& gt_roots, const std::vector<Vec3>& pred_roots);

/// Mean per-joint error over matched people; with align_root both poses are
/// expressed relative to their own root first.
std::optional<double> mpjpe(const MatchResult& m, const std::vector<Pose3D>& gt, const std::vector<Pose3D>& pred,
                            bool align_root, int root);

enum class Population { Matched, All };

struct PckResult {
  double pck_abs = 0;   // %
  double pck_root = 0;  // %
};

/// pck_abs: joints within thresh_abs of the GT (absolute). Unmatched GT people
/// count as all-wrong under Population::All. pck_root: matched roots within thresh_root.
std::optional<PckResult> pck(const MatchResult& m, const std::vector<Pose3D>& gt, const std::vector<Pose3D>& pred,
                             double thresh_abs, double thresh_root, Population population, int root);

struct EvalOptions {
  double match_max_dist = 500;   // mm, 3D matching
  bool match_2d = false;         // match on projected roots instead
  double match_max_px = 8;
  double pck_abs_mm = 150;
  double pck_root_mm = 250;
  friend bool operator==(const EvalOptions&, const EvalOptions&) = default;
};

/// Pools scenes into one population of camera-frame poses.
class EvalSet {
 public:
  explicit EvalSet(int root) : root_(root) {}

  /// `alt_roots` are optional second root estimates scored on the same matches
  /// (e.g. the coarse root before refinement); pass empty to skip.
  void add_scene(const Camera& cam, const std::vector<Pose3D>& gt, const std::vector<Pose3D>& pred,
                 const std::vector<Vec3>& alt_roots, const EvalOptions& opt);

  const MatchResult& matches() const { return matches_; }
  const std::vector<Pose3D>& gt() const { return gt_; }
  const std::vector<Pose3D>& pred() const { return pred_; }
  std::vector<Vec3> gt_roots() const;
  std::vector<Vec3> pred_roots() const;
  const std::vector<Vec3>& alt_roots() const { return alt_; }
  bool has_alt() const { return has_alt_; }
  int root() const { return root_; }

 private:
  int root_;
  std::vector<Pose3D> gt_, pred_;  // camera frame
  std::vector<Vec3> alt_;          // camera frame, parallel to pred_
  bool has_alt_ = true;
  MatchResult matches_;
};

struct MetricsReport {
  std::optional<double> mrpe, mrpe_z, mpjpe_abs, mpjpe_rel, pck_abs, pck_abs_all, pck_root;
  std::optional<double> alt_mrpe, alt_mrpe_z;  // coarse-root errors on the same matches
  int gt_count = 0, pred_count = 0, matched = 0;
};

MetricsReport compute_metrics(const EvalSet& set, const EvalOptions& opt);

nlohmann::json report_to_json(const MetricsReport& r);

/// One row of the shared CSV report schema.
struct CsvRow {
  std::string protocol, cell_id, train_tag, test_tag, metric;
  double value = 0;
  int count = 0;
};

inline constexpr const char* kCsvHeader = "protocol,cell_id,train_tag,test_tag,metric,value,count";

/// Rows for every metric present in `r` (absent metrics are skipped).
std::vector<CsvRow> report_rows(const MetricsReport& r, const std::string& protocol, const std::string& cell_id,
                                const std::string& train_tag, const std::string& test_tag);

void write_csv(const std::filesystem::path& path, const std::vector<CsvRow>& rows);
std::vector<CsvRow> read_csv(const std::filesystem::path& path);

}  // namespace agrpose::eval
