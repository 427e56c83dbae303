#include "posedist/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "posedist/error.hpp"
#include "posedist/p3p.hpp"
#include "posedist/parallel.hpp"

namespace posedist {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

std::vector<int> inliers_of(const CameraIntrinsics& k, const std::vector<Pnp2d3d>& corr, const Pose& pose,
                            double threshold) {
  std::vector<int> out;
  const Mat3 r = pose.rotation.matrix();
  const double t2 = threshold * threshold;
  for (int i = 0; i < static_cast<int>(corr.size()); ++i) {
    Vec3 xc = r * corr[i].point + pose.translation;
    if (!(xc.z() > 0.0)) continue;
    double du = k.fx * xc.x() / xc.z() + k.cx - corr[i].pixel.x();
    double dv = k.fy * xc.y() / xc.z() + k.cy - corr[i].pixel.y();
    if (du * du + dv * dv < t2) out.push_back(i);
  }
  return out;
}

int count_inliers(const CameraIntrinsics& k, const std::vector<Pnp2d3d>& corr, const Pose& pose,
                  double threshold) {
  int n = 0;
  const Mat3 r = pose.rotation.matrix();
  const double t2 = threshold * threshold;
  for (const auto& c : corr) {
    Vec3 xc = r * c.point + pose.translation;
    if (!(xc.z() > 0.0)) continue;
    double du = k.fx * xc.x() / xc.z() + k.cx - c.pixel.x();
    double dv = k.fy * xc.y() / xc.z() + k.cy - c.pixel.y();
    if (du * du + dv * dv < t2) ++n;
  }
  return n;
}

double total_cost(const CameraIntrinsics& k, const std::vector<Pnp2d3d>& corr, const Pose& pose) {
  double c = 0.0;
  for (const auto& x : corr) {
    Vec3 xc = pose * x.point;
    if (!(xc.z() > 0.0)) return std::numeric_limits<double>::infinity();
    c += (project_camera_point(k, xc) - x.pixel).squaredNorm();
  }
  return c;
}

bool in_front(const TriMesh& mesh, const Pose& pose) {
  for (const auto& v : mesh.vertices) {
    if (!((pose * v).z() > 0.0)) return false;
  }
  return true;
}

}  // namespace

void EstimatorParams::validate() const {
  if (grid_level < 0 || grid_level > So3Grid::kMaxLevel) {
    throw Error(ErrorCode::kInvalidArgument, "grid level must be in [0, 8]");
  }
  if (!(tau_score > 0.0 && tau_score <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "tau_score must be in (0, 1]");
  if (!(tau_desc > 0.0 && tau_desc <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "tau_desc must be in (0, 1]");
  if (ransac.iterations <= 0 || !(ransac.threshold_px > 0.0) || ransac.min_inliers < 3) {
    throw Error(ErrorCode::kInvalidArgument, "RANSAC needs iterations > 0, threshold > 0, min_inliers >= 3");
  }
  if (refine.max_iterations < 0) throw Error(ErrorCode::kInvalidArgument, "refine iterations must be >= 0");
}

Json params_to_json(const EstimatorParams& p) {
  return {{"grid_level", p.grid_level},
          {"tau_dens", p.tau_dens},
          {"tau_score", p.tau_score},
          {"tau_desc", p.tau_desc},
          {"ransac", {{"iterations", p.ransac.iterations},
                      {"threshold_px", p.ransac.threshold_px},
                      {"min_inliers", p.ransac.min_inliers}}},
          {"refine", {{"enabled", p.refine.enabled}, {"max_iterations", p.refine.max_iterations}}},
          {"seed", p.seed}};
}

EstimatorParams params_from_json(const Json& j, EstimatorParams p) {
  try {
    p.grid_level = j.value("grid_level", p.grid_level);
    p.tau_dens = j.value("tau_dens", p.tau_dens);
    p.tau_score = j.value("tau_score", p.tau_score);
    p.tau_desc = j.value("tau_desc", p.tau_desc);
    if (j.contains("ransac")) {
      const auto& r = j["ransac"];
      p.ransac.iterations = r.value("iterations", p.ransac.iterations);
      p.ransac.threshold_px = r.value("threshold_px", p.ransac.threshold_px);
      p.ransac.min_inliers = r.value("min_inliers", p.ransac.min_inliers);
    }
    if (j.contains("refine")) {
      const auto& r = j["refine"];
      p.refine.enabled = r.value("enabled", p.refine.enabled);
      p.refine.max_iterations = r.value("max_iterations", p.refine.max_iterations);
    }
    p.seed = j.value("seed", p.seed);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad estimator params: ") + e.what());
  }
  p.validate();
  return p;
}

Json distribution_to_json(const PoseDistribution& d) {
  Json poses = Json::array();
  for (const auto& s : d.poses) {
    const Quat& q = s.pose.rotation.quaternion();
    poses.push_back({{"quaternion_wxyz", {q.w(), q.x(), q.y(), q.z()}},
                     {"translation_m", {s.pose.translation.x(), s.pose.translation.y(), s.pose.translation.z()}},
                     {"gamma", s.gamma},
                     {"gamma_desc", s.gamma_desc},
                     {"gamma_mask", s.gamma_mask},
                     {"bin", s.bin},
                     {"inliers", s.inliers}});
  }
  return {{"status", d.found ? "ok" : "NoPoseFound"},
          {"poses", poses},
          {"params", params_to_json(d.params)},
          {"provenance", {{"scenario_hash", d.scenario_hash}, {"model_hash", d.model_hash}}},
          {"diagnostics", {{"hypotheses", d.hypotheses},
                           {"pruned_hypotheses", d.pruned},
                           {"groups", d.groups},
                           {"candidates", d.candidates},
                           {"max_density", d.max_density},
                           {"max_inliers", d.max_inliers},
                           {"score_max", d.score_max}}}};
}

std::vector<CellId> hypothesis_bins(const HypothesisSet& h, const Observation& obs, const SymModel& model,
                                    const So3Grid& grid, int threads) {
  std::vector<CellId> bins(h.size());
  parallel_for(h.size(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) bins[i] = grid.bin_of(h.rotation(i, obs, model));
  });
  return bins;
}

std::vector<BinnedHypothesis> prune_hypotheses(const HypothesisSet& h, const std::vector<CellId>& bins,
                                               const So3Grid& grid, std::uint64_t tau_dens) {
  DensityHistogram q = histogram_from_bins(grid, bins);
  std::vector<BinnedHypothesis> out;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (q.count(bins[i]) > tau_dens) out.push_back({h.items[i], bins[i]});
  }
  return out;
}

std::map<CellId, std::vector<Correspondence>> group_by_bin(const std::vector<BinnedHypothesis>& pruned) {
  std::map<CellId, std::vector<Correspondence>> groups;
  for (const auto& b : pruned) groups[b.bin].push_back(b.source);
  return groups;
}

Pose refine_pose(const CameraIntrinsics& k, const std::vector<Pnp2d3d>& corr, const Pose& start,
                 int max_iterations) {
  Pose pose = start;
  double cost = total_cost(k, corr, pose);
  double lambda = 1e-3;
  using Mat6 = Eigen::Matrix<double, 6, 6>;
  using Vec6 = Eigen::Matrix<double, 6, 1>;
  for (int it = 0; it < max_iterations && std::isfinite(cost); ++it) {
    Mat6 jtj = Mat6::Zero();
    Vec6 jtr = Vec6::Zero();
    const Mat3 r = pose.rotation.matrix();
    for (const auto& c : corr) {
      Vec3 rx = r * c.point;
      Vec3 xc = rx + pose.translation;
      double iz = 1.0 / xc.z();
      Eigen::Matrix<double, 2, 3> dp;
      dp << k.fx * iz, 0.0, -k.fx * xc.x() * iz * iz, 0.0, k.fy * iz, -k.fy * xc.y() * iz * iz;
      Eigen::Matrix<double, 2, 6> j;
      j.leftCols<3>() = -dp * skew(rx);
      j.rightCols<3>() = dp;
      Vec2 res(k.fx * xc.x() * iz + k.cx - c.pixel.x(), k.fy * xc.y() * iz + k.cy - c.pixel.y());
      jtj += j.transpose() * j;
      jtr += j.transpose() * res;
    }
    bool improved = false;
    for (int attempt = 0; attempt < 10 && !improved; ++attempt) {
      Mat6 a = jtj;
      a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      Vec6 delta = -a.ldlt().solve(jtr);
      if (!delta.allFinite()) break;
      Pose next{Rotation::from_angle_axis(delta.head<3>()) * pose.rotation, pose.translation + delta.tail<3>()};
      double c = total_cost(k, corr, next);
      if (c < cost) {
        bool converged = delta.norm() < 1e-14 || cost - c < 1e-16 * cost;
        pose = next;
        cost = c;
        lambda = std::max(lambda * 0.1, 1e-12);
        improved = true;
        if (converged) return pose;
      } else {
        lambda *= 10.0;
      }
    }
    if (!improved) break;
  }
  return pose;
}

std::optional<PnpResult> pnp_ransac(const CameraIntrinsics& k, const std::vector<Pnp2d3d>& corr,
                                    const RansacParams& ransac, const RefineParams& refine,
                                    std::uint64_t seed, const CandidateGate& gate) {
  if (corr.size() < 3) throw Error(ErrorCode::kTooFewCorrespondences, "PnP-RANSAC needs at least 3 correspondences");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, corr.size() - 1);
  Pose best;
  int best_count = -1;
  for (int it = 0; it < ransac.iterations; ++it) {
    std::size_t a = pick(rng), b = pick(rng), c = pick(rng);
    if (a == b || a == c || b == c) continue;
    const auto &ca = corr[a], &cb = corr[b], &cc = corr[c];
    if (ca.pixel == cb.pixel || ca.pixel == cc.pixel || cb.pixel == cc.pixel) continue;
    std::vector<Pose> sols;
    try {
      sols = p3p_solve(k, {ca.pixel, cb.pixel, cc.pixel}, {ca.point, cb.point, cc.point});
    } catch (const Error&) {
      continue;
    }
    for (const auto& s : sols) {
      if (gate && !gate(s)) continue;
      int n = count_inliers(k, corr, s, ransac.threshold_px);
      if (n > best_count) {
        best_count = n;
        best = s;
      }
    }
  }
  if (best_count < ransac.min_inliers) return std::nullopt;
  PnpResult out{best, inliers_of(k, corr, best, ransac.threshold_px)};
  if (refine.enabled && refine.max_iterations > 0) {
    std::vector<Pnp2d3d> in;
    for (int i : out.inliers) in.push_back(corr[i]);
    Pose refined = refine_pose(k, in, best, refine.max_iterations);
    auto refined_inliers = inliers_of(k, corr, refined, ransac.threshold_px);
    if (refined_inliers.size() >= out.inliers.size()) out = {refined, std::move(refined_inliers)};
  }
  return out;
}

PoseScore score_pose(const Observation& obs, const SymModel& model, const Eigen::VectorXd& log_z,
                     const Pose& pose) {
  const auto vis = visible_points(model, obs.camera, pose);
  if (vis.empty()) throw Error(ErrorCode::kNoVisiblePoints, "no model point visible at this pose");
  const double off_mask = -std::log(static_cast<double>(model.size()));
  double sd = 0.0, sm = 0.0;
  for (int i : vis) {
    Vec2 p = project(obs.camera, pose, model.points[i]);
    int idx = obs.index_at(static_cast<int>(std::lround(p.x())), static_cast<int>(std::lround(p.y())));
    if (idx >= 0) {
      sd += sim_desc(obs, model, log_z, idx, i);
      sm += 1.0;
    } else {
      sd += off_mask;
    }
  }
  PoseScore s;
  s.visible = vis.size();
  s.gamma_desc = sd / static_cast<double>(vis.size());
  s.gamma_mask = sm / static_cast<double>(vis.size());
  s.gamma = s.gamma_desc + s.gamma_mask;
  return s;
}

bool passes_score_filter(double gamma, double score_max, double tau_score) {
  return gamma >= score_max - (1.0 - tau_score) * std::abs(score_max);
}

MatchCache build_match_cache(const Observation& obs, const SymModel& model, double tau_desc, int threads) {
  MatchCache c;
  c.tau_desc = tau_desc;
  c.hypotheses = all_hypotheses(obs, model, tau_desc, threads, &c.log_z);
  return c;
}

PoseDistribution estimate_distribution(const Observation& obs, const SymModel& model,
                                       const EstimatorParams& params, EstimateTrace* trace) {
  params.validate();
  return estimate_distribution(obs, model, build_match_cache(obs, model, params.tau_desc, params.threads),
                               params, trace);
}

PoseDistribution estimate_distribution(const Observation& obs, const SymModel& model,
                                       const MatchCache& cache, const EstimatorParams& params,
                                       EstimateTrace* trace) {
  params.validate();
  if (cache.tau_desc != params.tau_desc) {
    throw Error(ErrorCode::kInvalidArgument, "match cache was built with a different tau_desc");
  }
  PoseDistribution dist;
  dist.params = params;
  const So3Grid grid = build_grid(params.grid_level);
  const HypothesisSet& h = cache.hypotheses;
  dist.hypotheses = h.size();

  auto bins = hypothesis_bins(h, obs, model, grid, params.threads);
  auto pruned = prune_hypotheses(h, bins, grid, params.tau_dens);
  dist.pruned = pruned.size();
  dist.max_density = histogram_from_bins(grid, bins).max_count();
  auto groups = group_by_bin(pruned);
  dist.groups = groups.size();
  if (trace) {
    trace->initial.clear();
    trace->pruned.clear();
    for (std::size_t i = 0; i < h.size(); ++i) trace->initial.push_back(h.rotation(i, obs, model));
    for (const auto& b : pruned) {
      trace->pruned.push_back(compose_frames(obs.frames[b.source.pixel], model.frames[b.source.point]));
    }
    trace->groups.clear();
    trace->group_bins.clear();
    for (const auto& [bin, g] : groups) {
      trace->group_bins.push_back(bin);
      trace->groups.push_back(g);
    }
  }

  std::vector<std::pair<CellId, const std::vector<Correspondence>*>> work;
  for (const auto& [bin, g] : groups) work.emplace_back(bin, &g);
  std::vector<std::optional<ScoredPose>> results(work.size());
  std::vector<int> best_inliers(work.size(), 0);
  parallel_for(work.size(), params.threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t w = b; w < e; ++w) {
      const CellId bin = work[w].first;
      const auto& group = *work[w].second;
      if (group.size() < 3) continue;
      std::vector<Pnp2d3d> corr;
      corr.reserve(group.size());
      for (const auto& c : group) {
        corr.push_back({obs.pixels[c.pixel].cast<double>(), model.points[c.point]});
      }
      const Rotation rep = grid.representative(bin);
      const double ring = grid.ring_radius();
      CandidateGate gate = [&](const Pose& p) { return d_ang(p.rotation, rep) <= ring; };
      auto res = pnp_ransac(obs.camera, corr, params.ransac, params.refine,
                            splitmix64(params.seed ^ splitmix64(bin)), gate);
      if (!res) continue;
      best_inliers[w] = static_cast<int>(res->inliers.size());
      if (!in_front(model.mesh, res->pose)) continue;
      PoseScore s;
      try {
        s = score_pose(obs, model, cache.log_z, res->pose);
      } catch (const Error&) {
        continue;
      }
      results[w] = ScoredPose{res->pose, s.gamma, s.gamma_desc, s.gamma_mask, bin,
                              static_cast<int>(res->inliers.size())};
    }
  });

  std::vector<ScoredPose> candidates;
  for (std::size_t w = 0; w < work.size(); ++w) {
    dist.max_inliers = std::max(dist.max_inliers, best_inliers[w]);
    if (results[w]) candidates.push_back(*results[w]);
  }
  dist.candidates = candidates.size();
  if (candidates.empty()) return dist;
  dist.score_max = candidates.front().gamma;
  for (const auto& c : candidates) dist.score_max = std::max(dist.score_max, c.gamma);
  for (const auto& c : candidates) {
    if (passes_score_filter(c.gamma, dist.score_max, params.tau_score)) dist.poses.push_back(c);
  }
  dist.found = !dist.poses.empty();
  return dist;
}

}  // namespace posedist
