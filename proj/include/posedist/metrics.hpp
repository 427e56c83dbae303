#pragma once

#include <cstdint>
#include <vector>

#include "posedist/estimator.hpp"

namespace posedist {

struct GtPoseSet {
  std::vector<Pose> poses;
  SymmetrySpec symmetry;
  bool occlusion_aware = false;
  double step_deg = 1.0;
};

Json gt_set_to_json(const GtPoseSet& gt);

/// Ground-truth pose set. Markers restrict the group to the elements mapping
/// the marker set onto itself. With `obs`, every element of the full
/// geometric group is kept whose score on obs matches the score of gt_pose
/// within 1e-3 (score equivalence); `log_z` is computed if not given. The
/// sampled model is not exactly invariant under arbitrary orbit angles, so
/// continuous symmetries always use the marker rule.
GtPoseSet gt_pose_set(const SymModel& model, const Pose& gt_pose, const SymmetrySpec& symmetry,
                      bool occlusion_aware, const Observation* obs = nullptr, double step_deg = 1.0,
                      const Eigen::VectorXd* log_z = nullptr);

/// Deterministic subsample of model points used by the distances below.
struct MetricPoints {
  std::vector<Vec3> points;
  std::uint64_t seed = 0;
};

constexpr std::size_t kMetricPoints = 1000;
constexpr std::uint64_t kMetricSeed = 0x5eed;

MetricPoints metric_points(const SymModel& model, std::size_t count = kMetricPoints,
                           std::uint64_t seed = kMetricSeed);

/// Max reprojection distance over the points, pixels.
double mspd(const MetricPoints& pts, const CameraIntrinsics& k, const Pose& a, const Pose& b);
/// Max 3D distance over the points, meters.
double mssd(const MetricPoints& pts, const Pose& a, const Pose& b);

struct PrCurve {
  std::vector<double> thresholds;
  std::vector<double> precision;
  std::vector<double> recall;
};

struct PrReport {
  double precision_mpd = 0.0;
  double recall_mpd = 0.0;
  double precision_msd = 0.0;
  double recall_msd = 0.0;
  double threshold_mpd_px = 0.0;
  double threshold_msd_m = 0.0;
  PrCurve curve_mpd;
  PrCurve curve_msd;
  /// Distances of the highest-scoring pose to its nearest GT pose (-1 if none).
  double best_mspd_px = -1.0;
  double best_mssd_m = -1.0;
  std::size_t predicted = 0;
  std::size_t ground_truth = 0;
  std::uint64_t point_seed = 0;
};

struct PrThresholds {
  /// Scalar thresholds; <= 0 selects the defaults (5% of the crop diagonal,
  /// 5% of the object diameter).
  double mpd_px = 0.0;
  double msd_m = 0.0;
  /// Curve thresholds as fractions of the defaults' reference lengths.
  std::vector<double> curve_fractions = {0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.08, 0.10, 0.15, 0.20};
};

/// Nearest-neighbour precision/recall. Throws kEmptyGt. Empty prediction gives
/// precision = recall = 0.
PrReport pr_report(const std::vector<ScoredPose>& predicted, const GtPoseSet& gt, const SymModel& model,
                   const CameraIntrinsics& k, const PrThresholds& thresholds = {});

Json pr_to_json(const PrReport& r);
/// Rows: metric,threshold,precision,recall.
std::string pr_curves_csv(const PrReport& r);

/// Single-linkage clusters of the rotations at `link_deg`; label per pose,
/// labels numbered by first appearance.
std::vector<int> cluster_modes(const std::vector<Pose>& poses, double link_deg = 5.0);
int count_modes(const std::vector<Pose>& poses, double link_deg = 5.0);

}  // namespace posedist
