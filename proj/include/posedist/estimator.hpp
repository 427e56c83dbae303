#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "posedist/matcher.hpp"
#include "posedist/obsgen.hpp"
#include "posedist/so3grid.hpp"

namespace posedist {

struct RansacParams {
  int iterations = 200;
  double threshold_px = 2.0;
  int min_inliers = 6;
};

struct RefineParams {
  bool enabled = true;
  int max_iterations = 20;
};

struct EstimatorParams {
  int grid_level = 4;
  std::uint64_t tau_dens = 10;
  double tau_score = 0.9;
  double tau_desc = kDefaultTauDesc;
  RansacParams ransac;
  RefineParams refine;
  std::uint64_t seed = 0;
  /// Worker threads; results do not depend on it.
  int threads = 1;

  void validate() const;
};

Json params_to_json(const EstimatorParams& p);
EstimatorParams params_from_json(const Json& j, EstimatorParams base = {});

struct ScoredPose {
  Pose pose;
  double gamma = 0.0;
  double gamma_desc = 0.0;
  double gamma_mask = 0.0;
  CellId bin = 0;
  int inliers = 0;
};

struct PoseDistribution {
  std::vector<ScoredPose> poses;
  EstimatorParams params;
  std::string scenario_hash;
  std::string model_hash;
  bool found = false;
  // Diagnostics.
  std::size_t hypotheses = 0;
  std::size_t pruned = 0;
  std::size_t groups = 0;
  std::size_t candidates = 0;
  std::uint64_t max_density = 0;
  int max_inliers = 0;
  double score_max = 0.0;
};

Json distribution_to_json(const PoseDistribution& d);

/// Hypothesis with its bin, after density pruning.
struct BinnedHypothesis {
  Correspondence source;
  CellId bin = 0;
};

/// Bin of every hypothesis in H (parallel, order preserving).
std::vector<CellId> hypothesis_bins(const HypothesisSet& h, const Observation& obs, const SymModel& model,
                                    const So3Grid& grid, int threads = 1);

/// Keeps hypotheses whose bin holds more than tau_dens of them.
std::vector<BinnedHypothesis> prune_hypotheses(const HypothesisSet& h, const std::vector<CellId>& bins,
                                               const So3Grid& grid, std::uint64_t tau_dens);

/// Correspondences grouped by bin, in bin order; group members keep their
/// (pixel, point) order.
std::map<CellId, std::vector<Correspondence>> group_by_bin(const std::vector<BinnedHypothesis>& pruned);

struct PnpResult {
  Pose pose;
  std::vector<int> inliers;
};

struct Pnp2d3d {
  Vec2 pixel;
  Vec3 point;
};

/// Rejects candidates before consensus (e.g. the bin 1-ring gate).
using CandidateGate = std::function<bool(const Pose&)>;

/// Seeded P3P-RANSAC plus reprojection refinement of the inliers. Returns
/// nothing if fewer than min_inliers agree. Throws kTooFewCorrespondences.
std::optional<PnpResult> pnp_ransac(const CameraIntrinsics& k, const std::vector<Pnp2d3d>& corr,
                                    const RansacParams& ransac, const RefineParams& refine,
                                    std::uint64_t seed, const CandidateGate& gate = nullptr);

/// Levenberg-Marquardt on total squared reprojection error.
Pose refine_pose(const CameraIntrinsics& k, const std::vector<Pnp2d3d>& corr, const Pose& start,
                 int max_iterations);

struct PoseScore {
  double gamma = 0.0;
  double gamma_desc = 0.0;
  double gamma_mask = 0.0;
  std::size_t visible = 0;
};

/// Descriptor plus mask score over the visible model points. Off-mask or out-of-crop projections
/// score sim_desc = -log |P| and mask 0. Throws kNoVisiblePoints.
PoseScore score_pose(const Observation& obs, const SymModel& model, const Eigen::VectorXd& log_z,
                     const Pose& pose);

/// Keep rule gamma >= score_max - (1 - tau) |score_max| (equals
/// tau * score_max for non-negative maxima).
bool passes_score_filter(double gamma, double score_max, double tau_score);

/// Reusable matching state: hypotheses and the log-partition cache depend
/// only on the observation, the model and tau_desc.
struct MatchCache {
  HypothesisSet hypotheses;
  Eigen::VectorXd log_z;
  double tau_desc = 0.0;
};

MatchCache build_match_cache(const Observation& obs, const SymModel& model, double tau_desc, int threads);

/// Intermediate rotation sets, for plots.
struct EstimateTrace {
  std::vector<Rotation> initial;
  std::vector<Rotation> pruned;
  std::vector<std::vector<Correspondence>> groups;
  std::vector<CellId> group_bins;
};

PoseDistribution estimate_distribution(const Observation& obs, const SymModel& model,
                                       const EstimatorParams& params, EstimateTrace* trace = nullptr);
PoseDistribution estimate_distribution(const Observation& obs, const SymModel& model,
                                       const MatchCache& cache, const EstimatorParams& params,
                                       EstimateTrace* trace = nullptr);

}  // namespace posedist
