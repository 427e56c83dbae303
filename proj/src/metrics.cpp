#include "posedist/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "posedist/error.hpp"

namespace posedist {
namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
constexpr double kScoreTolerance = 1e-3;

bool maps_markers_onto_themselves(const SymmetrySpec& s, const Rotation& g) {
  for (const auto& m : s.markers) {
    Vec3 c = g * m.center;
    bool hit = false;
    for (const auto& o : s.markers) {
      if ((c - o.center).norm() <= 1e-9 && std::abs(m.radius - o.radius) <= 1e-12) hit = true;
    }
    if (!hit) return false;
  }
  return true;
}

struct Transformed {
  std::vector<Vec3> xc;
  std::vector<Vec2> px;
};

Transformed transform(const MetricPoints& pts, const CameraIntrinsics& k, const Pose& p) {
  Transformed t;
  t.xc.reserve(pts.points.size());
  t.px.reserve(pts.points.size());
  for (const auto& x : pts.points) {
    Vec3 xc = p * x;
    t.xc.push_back(xc);
    t.px.push_back(project_camera_point(k, xc));
  }
  return t;
}

double max_dist3(const Transformed& a, const Transformed& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.xc.size(); ++i) m = std::max(m, (a.xc[i] - b.xc[i]).squaredNorm());
  return std::sqrt(m);
}

double max_dist2(const Transformed& a, const Transformed& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.px.size(); ++i) m = std::max(m, (a.px[i] - b.px[i]).squaredNorm());
  return std::sqrt(m);
}

// Fraction of rows (cols) whose minimum is within the threshold.
double fraction_within(const std::vector<double>& nearest, double threshold) {
  if (nearest.empty()) return 0.0;
  std::size_t n = 0;
  for (double d : nearest) n += d <= threshold ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(nearest.size());
}

Json curve_json(const PrCurve& c) {
  return {{"thresholds", c.thresholds}, {"precision", c.precision}, {"recall", c.recall}};
}

}  // namespace

Json gt_set_to_json(const GtPoseSet& gt) {
  Json poses = Json::array();
  for (const auto& p : gt.poses) poses.push_back(pose_to_json(p));
  return {{"symmetry", symmetry_to_json(gt.symmetry)},
          {"occlusion_aware", gt.occlusion_aware},
          {"step_deg", gt.step_deg},
          {"poses", poses}};
}

GtPoseSet gt_pose_set(const SymModel& model, const Pose& gt_pose, const SymmetrySpec& symmetry,
                      bool occlusion_aware, const Observation* obs, double step_deg,
                      const Eigen::VectorXd* log_z) {
  if (!(step_deg > 0.0)) throw Error(ErrorCode::kInvalidArgument, "gt_pose_set step must be > 0");
  GtPoseSet gt;
  gt.symmetry = symmetry;
  gt.occlusion_aware = occlusion_aware && obs != nullptr && symmetry.kind != SymmetryKind::kContinuous;
  gt.step_deg = step_deg;
  const auto group = symmetry.group_elements(step_deg * kDegToRad);
  if (!gt.occlusion_aware) {
    for (const auto& g : group) {
      if (maps_markers_onto_themselves(symmetry, g)) gt.poses.push_back({gt_pose.rotation * g, gt_pose.translation});
    }
    return gt;
  }
  Eigen::VectorXd own_log_z;
  if (!log_z) {
    own_log_z = log_partition(*obs, model);
    log_z = &own_log_z;
  }
  const double ref = score_pose(*obs, model, *log_z, gt_pose).gamma;
  for (const auto& g : group) {
    Pose p{gt_pose.rotation * g, gt_pose.translation};
    double s;
    try {
      s = score_pose(*obs, model, *log_z, p).gamma;
    } catch (const Error&) {
      continue;
    }
    if (std::abs(s - ref) <= kScoreTolerance) gt.poses.push_back(p);
  }
  return gt;
}

MetricPoints metric_points(const SymModel& model, std::size_t count, std::uint64_t seed) {
  MetricPoints out;
  out.seed = seed;
  std::vector<std::size_t> idx(model.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (count < idx.size()) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng() % (idx.size() - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
  }
  out.points.reserve(idx.size());
  for (auto i : idx) out.points.push_back(model.points[i]);
  return out;
}

double mspd(const MetricPoints& pts, const CameraIntrinsics& k, const Pose& a, const Pose& b) {
  return max_dist2(transform(pts, k, a), transform(pts, k, b));
}

double mssd(const MetricPoints& pts, const Pose& a, const Pose& b) {
  CameraIntrinsics k;
  return max_dist3(transform(pts, k, a), transform(pts, k, b));
}

PrReport pr_report(const std::vector<ScoredPose>& predicted, const GtPoseSet& gt, const SymModel& model,
                   const CameraIntrinsics& k, const PrThresholds& thresholds) {
  if (gt.poses.empty()) throw Error(ErrorCode::kEmptyGt, "ground-truth pose set is empty");
  PrReport r;
  const double diag = std::hypot(static_cast<double>(k.width), static_cast<double>(k.height));
  r.threshold_mpd_px = thresholds.mpd_px > 0.0 ? thresholds.mpd_px : 0.05 * diag;
  r.threshold_msd_m = thresholds.msd_m > 0.0 ? thresholds.msd_m : 0.05 * model.diameter();
  r.predicted = predicted.size();
  r.ground_truth = gt.poses.size();

  const MetricPoints pts = metric_points(model);
  r.point_seed = pts.seed;
  std::vector<Transformed> tp, tg;
  for (const auto& p : predicted) tp.push_back(transform(pts, k, p.pose));
  for (const auto& g : gt.poses) tg.push_back(transform(pts, k, g));

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> pred_mpd(tp.size(), inf), pred_msd(tp.size(), inf);
  std::vector<double> gt_mpd(tg.size(), inf), gt_msd(tg.size(), inf);
  for (std::size_t i = 0; i < tp.size(); ++i) {
    for (std::size_t j = 0; j < tg.size(); ++j) {
      double d2 = max_dist2(tp[i], tg[j]);
      double d3 = max_dist3(tp[i], tg[j]);
      pred_mpd[i] = std::min(pred_mpd[i], d2);
      pred_msd[i] = std::min(pred_msd[i], d3);
      gt_mpd[j] = std::min(gt_mpd[j], d2);
      gt_msd[j] = std::min(gt_msd[j], d3);
    }
  }
  if (!predicted.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < predicted.size(); ++i) {
      if (predicted[i].gamma > predicted[best].gamma) best = i;
    }
    r.best_mspd_px = pred_mpd[best];
    r.best_mssd_m = pred_msd[best];
  }

  r.precision_mpd = fraction_within(pred_mpd, r.threshold_mpd_px);
  r.recall_mpd = tp.empty() ? 0.0 : fraction_within(gt_mpd, r.threshold_mpd_px);
  r.precision_msd = fraction_within(pred_msd, r.threshold_msd_m);
  r.recall_msd = tp.empty() ? 0.0 : fraction_within(gt_msd, r.threshold_msd_m);
  for (double f : thresholds.curve_fractions) {
    double t2 = f * diag, t3 = f * model.diameter();
    r.curve_mpd.thresholds.push_back(t2);
    r.curve_mpd.precision.push_back(fraction_within(pred_mpd, t2));
    r.curve_mpd.recall.push_back(tp.empty() ? 0.0 : fraction_within(gt_mpd, t2));
    r.curve_msd.thresholds.push_back(t3);
    r.curve_msd.precision.push_back(fraction_within(pred_msd, t3));
    r.curve_msd.recall.push_back(tp.empty() ? 0.0 : fraction_within(gt_msd, t3));
  }
  return r;
}

Json pr_to_json(const PrReport& r) {
  return {{"precision_mpd", r.precision_mpd},
          {"recall_mpd", r.recall_mpd},
          {"precision_msd", r.precision_msd},
          {"recall_msd", r.recall_msd},
          {"threshold_mpd_px", r.threshold_mpd_px},
          {"threshold_msd_m", r.threshold_msd_m},
          {"best_mspd_px", r.best_mspd_px},
          {"best_mssd_m", r.best_mssd_m},
          {"predicted", r.predicted},
          {"ground_truth", r.ground_truth},
          {"point_seed", r.point_seed},
          {"curve_mpd", curve_json(r.curve_mpd)},
          {"curve_msd", curve_json(r.curve_msd)}};
}

std::string pr_curves_csv(const PrReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "metric,threshold,precision,recall\n";
  for (std::size_t i = 0; i < r.curve_mpd.thresholds.size(); ++i) {
    os << "mpd," << r.curve_mpd.thresholds[i] << ',' << r.curve_mpd.precision[i] << ',' << r.curve_mpd.recall[i]
       << '\n';
  }
  for (std::size_t i = 0; i < r.curve_msd.thresholds.size(); ++i) {
    os << "msd," << r.curve_msd.thresholds[i] << ',' << r.curve_msd.precision[i] << ',' << r.curve_msd.recall[i]
       << '\n';
  }
  return os.str();
}

std::vector<int> cluster_modes(const std::vector<Pose>& poses, double link_deg) {
  const std::size_t n = poses.size();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  const double link = link_deg * kDegToRad;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (d_ang(poses[i].rotation, poses[j].rotation) <= link) {
        int a = find(static_cast<int>(i)), b = find(static_cast<int>(j));
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::vector<int> label(n, -1), root_label(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    int r = find(static_cast<int>(i));
    if (root_label[r] < 0) root_label[r] = next++;
    label[i] = root_label[r];
  }
  return label;
}

int count_modes(const std::vector<Pose>& poses, double link_deg) {
  auto l = cluster_modes(poses, link_deg);
  return l.empty() ? 0 : *std::max_element(l.begin(), l.end()) + 1;
}

}  // namespace posedist
