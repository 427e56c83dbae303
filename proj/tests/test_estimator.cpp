#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "posedist/error.hpp"
#include "posedist/estimator.hpp"
#include "posedist/scenarios.hpp"

using namespace posedist;

namespace {

constexpr double kDeg = 3.14159265358979323846 / 180.0;

const SymModel& model_for(const std::string& name, int points = 50000) {
  static std::map<std::pair<std::string, int>, SymModel> cache;
  auto key = std::make_pair(name, points);
  auto it = cache.find(key);
  if (it == cache.end()) {
    auto obj = bundled_object(name);
    SymModelParams p;
    p.seed = 5;
    p.max_points = points;
    it = cache.emplace(key, build_symmodel(obj.mesh, obj.symmetry, p)).first;
  }
  return it->second;
}

struct Scene {
  Observation obs;
  MatchCache cache;
};

const Scene& scene_for(const std::string& name, int points = 50000) {
  static std::map<std::pair<std::string, int>, Scene> cache;
  auto key = std::make_pair(name, points);
  auto it = cache.find(key);
  if (it == cache.end()) {
    const auto& m = model_for(name, points);
    Observation obs = render(m, default_scenario(name, 1));
    MatchCache c = build_match_cache(obs, m, kDefaultTauDesc, 1);
    it = cache.emplace(key, Scene{std::move(obs), std::move(c)}).first;
  }
  return it->second;
}

// Synthetic PnP instance: points in a 0.1 m box, pose 0.5 m away.
std::vector<Pnp2d3d> synthetic_pnp(const Pose& gt, const CameraIntrinsics& k, int n, double outlier_frac,
                                   std::mt19937_64& rng) {
  std::uniform_real_distribution<double> box(-0.05, 0.05), px(0.0, 128.0), u01(0.0, 1.0);
  std::vector<Pnp2d3d> out;
  for (int i = 0; i < n; ++i) {
    Vec3 x(box(rng), box(rng), box(rng));
    Vec2 p = project(k, gt, x);
    if (u01(rng) < outlier_frac) p = Vec2(px(rng), px(rng));
    out.push_back({p, x});
  }
  return out;
}

}  // namespace

TEST_CASE("estimator params validate and round trip") {
  EstimatorParams p;
  p.grid_level = 5;
  p.tau_dens = 7;
  p.seed = 99;
  auto back = params_from_json(params_to_json(p));
  CHECK(params_to_json(back).dump() == params_to_json(p).dump());
  p.tau_score = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.grid_level = 9;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.ransac.min_inliers = 2;
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("refinement converges from a perturbed start") {
  auto k = default_camera();
  std::mt19937_64 rng(4);
  Pose gt{random_rotation(rng), Vec3(0.01, -0.005, 0.5)};
  auto corr = synthetic_pnp(gt, k, 60, 0.0, rng);
  Pose start{Rotation::about(Vec3(1, 2, 3).normalized(), 2 * kDeg) * gt.rotation, gt.translation + Vec3(0.003, 0, -0.01)};
  Pose r = refine_pose(k, corr, start, 30);
  CHECK(d_ang(r.rotation, gt.rotation) < 1e-9);
  CHECK((r.translation - gt.translation).norm() < 1e-10);
}

TEST_CASE("pnp ransac survives 40 percent outliers") {
  auto k = default_camera();
  int ok = 0;
  for (int s = 0; s < 20; ++s) {
    std::mt19937_64 rng(100 + s);
    Pose gt{random_rotation(rng), Vec3(0, 0, 0.5)};
    auto corr = synthetic_pnp(gt, k, 100, 0.4, rng);
    auto res = pnp_ransac(k, corr, {}, {}, s);
    if (res && d_ang(res->pose.rotation, gt.rotation) < 1 * kDeg &&
        (res->pose.translation - gt.translation).norm() < 0.01 * 0.1 * std::sqrt(3.0))
      ++ok;
  }
  CHECK(ok == 20);
  std::vector<Pnp2d3d> two(2);
  CHECK_THROWS_AS(pnp_ransac(k, two, {}, {}, 0), Error);
}

TEST_CASE("raising tau_dens never adds hypotheses") {
  const auto& m = model_for("hex_prism", 20000);
  const auto& sc = scene_for("hex_prism", 20000);
  auto grid = build_grid(4);
  auto bins = hypothesis_bins(sc.cache.hypotheses, sc.obs, m, grid);
  auto hist = histogram_from_bins(grid, bins);
  std::size_t prev = sc.cache.hypotheses.size() + 1;
  for (std::uint64_t t : {0, 5, 10, 50, 200, 1000}) {
    auto pruned = prune_hypotheses(sc.cache.hypotheses, bins, grid, t);
    CHECK(pruned.size() <= prev);
    prev = pruned.size();
    bool dense = true;
    for (const auto& b : pruned) dense = dense && hist.count(b.bin) > t;
    CHECK(dense);
  }
}

TEST_CASE("score filter is monotone in tau_score") {
  for (double smax : {-8.0, 2.0}) {
    std::size_t prev = 1000;
    for (double tau : {0.5, 0.8, 0.9, 0.95, 1.0}) {
      std::size_t n = 0;
      for (int i = 0; i < 1000; ++i) n += passes_score_filter(smax - i * 0.01, smax, tau);
      CHECK(n <= prev);
      prev = n;
    }
    CHECK(passes_score_filter(smax, smax, 1.0));
  }
  CHECK(passes_score_filter(1.8, 2.0, 0.9));
  CHECK_FALSE(passes_score_filter(1.79, 2.0, 0.9));
}

TEST_CASE("ground truth is a local maximum of the descriptor score") {
  const auto& m = model_for("marked_cube");
  const auto& sc = scene_for("marked_cube");
  auto gt = default_pose("marked_cube");
  double at_gt = score_pose(sc.obs, m, sc.cache.log_z, gt).gamma_desc;
  for (Vec3 axis : {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1), Vec3(1, 1, 1).normalized()}) {
    Pose off{gt.rotation * Rotation::about(axis, 15 * kDeg), gt.translation};
    CHECK(at_gt - score_pose(sc.obs, m, sc.cache.log_z, off).gamma_desc > 0);
  }
}

TEST_CASE("asymmetric correspondences concentrate in one component") {
  const auto& m = model_for("marked_cube");
  const auto& sc = scene_for("marked_cube");
  auto grid = build_grid(4);
  auto bins = hypothesis_bins(sc.cache.hypotheses, sc.obs, m, grid);
  auto hist = histogram_from_bins(grid, bins);
  std::vector<CellId> cells;
  for (const auto& [c, n] : hist.counts()) cells.push_back(c);
  auto label = connected_components(grid, cells);
  std::map<int, std::uint64_t> mass;
  for (std::size_t i = 0; i < cells.size(); ++i) mass[label[i]] += hist.counts()[i].second;
  std::uint64_t best = 0;
  for (const auto& [l, n] : mass) best = std::max(best, n);
  CHECK(static_cast<double>(best) / hist.total() >= 0.9);
}

TEST_CASE("asymmetric noiseless distribution is a single mode at the ground truth") {
  const auto& m = model_for("marked_cube");
  const auto& sc = scene_for("marked_cube");
  EstimatorParams p;
  p.seed = 3;
  auto d = estimate_distribution(sc.obs, m, sc.cache, p);
  REQUIRE(d.found);
  auto gt = default_pose("marked_cube");
  for (const auto& s : d.poses) {
    CHECK(d_ang(s.pose.rotation, gt.rotation) < 0.1 * kDeg);
    CHECK((s.pose.translation - gt.translation).norm() < 0.001 * m.diameter());
  }
  CHECK(d.score_max == doctest::Approx(std::max_element(d.poses.begin(), d.poses.end(), [](auto& a, auto& b) {
                                         return a.gamma < b.gamma;
                                       })->gamma));
}

TEST_CASE("six-fold prism yields six poses, one per symmetric image") {
  const auto& m = model_for("hex_prism", 20000);
  const auto& sc = scene_for("hex_prism", 20000);
  auto d = estimate_distribution(sc.obs, m, sc.cache, {});
  REQUIRE(d.found);
  auto gt = default_pose("hex_prism");
  std::vector<int> hits(6, 0);
  auto group = m.symmetry.group_elements();
  for (const auto& s : d.poses) {
    for (std::size_t i = 0; i < group.size(); ++i)
      if (d_ang(s.pose.rotation, gt.rotation * group[i]) < 3 * kDeg) ++hits[i];
  }
  for (int h : hits) CHECK(h >= 1);
}

TEST_CASE("results do not depend on the thread count") {
  const auto& m = model_for("hex_prism", 20000);
  const auto& sc = scene_for("hex_prism", 20000);
  EstimatorParams p;
  p.threads = 1;
  auto a = distribution_to_json(estimate_distribution(sc.obs, m, sc.cache, p)).dump();
  p.threads = 3;
  auto c3 = build_match_cache(sc.obs, m, kDefaultTauDesc, 3);
  auto b = distribution_to_json(estimate_distribution(sc.obs, m, c3, p)).dump();
  CHECK(a == b);
}

TEST_CASE("no pose found is reported, not thrown") {
  const auto& m = model_for("hex_prism", 20000);
  const auto& sc = scene_for("hex_prism", 20000);
  EstimatorParams p;
  p.tau_dens = 1000000000;
  auto d = estimate_distribution(sc.obs, m, sc.cache, p);
  CHECK_FALSE(d.found);
  CHECK(d.poses.empty());
  CHECK(distribution_to_json(d)["status"] == "NoPoseFound");
}
