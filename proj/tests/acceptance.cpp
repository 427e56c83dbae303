// Acceptance suite: one PASS/FAIL line per top-level criterion.
// Exit status is 0 once every criterion has been evaluated; --strict makes
// any FAIL fatal.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "posedist/error.hpp"
#include "posedist/estimator.hpp"
#include "posedist/losses.hpp"
#include "posedist/metrics.hpp"
#include "posedist/p3p.hpp"
#include "posedist/runner.hpp"
#include "posedist/scenarios.hpp"
#include "posedist/so3grid.hpp"

using namespace posedist;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDeg = kPi / 180.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Verdict {
  bool pass = true;
  std::vector<std::string> lines;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    lines.push_back(std::string(ok ? "  ok   " : "  FAIL ") + what);
  }
  void note(const std::string& what) { lines.push_back("  .    " + what); }
};

const SymModel& model_for(const std::string& name, int points = 50000) {
  static std::map<std::pair<std::string, int>, SymModel> cache;
  auto key = std::make_pair(name, points);
  auto it = cache.find(key);
  if (it == cache.end()) {
    auto obj = bundled_object(name);
    SymModelParams p;
    p.seed = 1;
    p.max_points = points;
    it = cache.emplace(key, build_symmodel(obj.mesh, obj.symmetry, p)).first;
  }
  return it->second;
}

// Noisy, top-occluded marked prism: six-way ambiguous with enough clutter
// for the thresholds to matter.
ScenarioConfig ablation_scenario(const SymModel& m) {
  auto sc = default_scenario("marked_prism", 1);
  sc.noise_desc = 0.4;
  sc.noise_frame = 0.2;
  sc.noise_mask = 2;
  sc.outlier_rate = 0.3;
  sc.occluder = top_cap_occluder(m.mesh, sc.camera, sc.gt_pose);
  return sc;
}

struct Estimate {
  Observation obs;
  MatchCache cache;
  PoseDistribution dist;
  double seconds = 0;
};

Estimate estimate(const SymModel& m, const ScenarioConfig& sc, EstimatorParams p = {}) {
  auto t0 = Clock::now();
  Estimate e;
  e.obs = render(m, sc);
  e.cache = build_match_cache(e.obs, m, p.tau_desc, p.threads);
  e.dist = estimate_distribution(e.obs, m, e.cache, p);
  e.seconds = seconds_since(t0);
  return e;
}

std::vector<Pose> poses_of(const PoseDistribution& d) {
  std::vector<Pose> out;
  for (const auto& s : d.poses) out.push_back(s.pose);
  return out;
}

// ---------------------------------------------------------------------------

Verdict symmetry_modes() {
  Verdict v;
  {
    const auto& m = model_for("marked_cube");
    auto sc = default_scenario("marked_cube", 1);
    auto e = estimate(m, sc);
    int modes = count_modes(poses_of(e.dist));
    double worst_r = 0, worst_t = 0;
    for (const auto& s : e.dist.poses) {
      worst_r = std::max(worst_r, d_ang(s.pose.rotation, sc.gt_pose.rotation));
      worst_t = std::max(worst_t, (s.pose.translation - sc.gt_pose.translation).norm());
    }
    v.check(modes == 1, fmt("marked_cube: %d mode(s), %zu poses", modes, e.dist.poses.size()));
    v.check(e.dist.found && worst_r < 2 * kDeg && worst_t < 0.01 * m.diameter(),
            fmt("marked_cube: worst rotation %.3f deg, worst translation %.3f%% of diameter", worst_r / kDeg,
                100 * worst_t / m.diameter()));
    v.check(e.seconds < 60, fmt("marked_cube: %.1f s", e.seconds));
  }
  {
    const auto& m = model_for("hex_prism");
    auto sc = default_scenario("hex_prism", 1);
    auto e = estimate(m, sc);
    auto poses = poses_of(e.dist);
    auto label = cluster_modes(poses);
    std::map<int, std::size_t> best;
    for (std::size_t i = 0; i < poses.size(); ++i) {
      auto it = best.find(label[i]);
      if (it == best.end() || e.dist.poses[i].gamma > e.dist.poses[it->second].gamma) best[label[i]] = i;
    }
    auto group = m.symmetry.group_elements();
    std::set<std::size_t> hit;
    double worst = 0;
    for (const auto& [l, i] : best) {
      double nearest = 1e9;
      std::size_t arg = 0;
      for (std::size_t g = 0; g < group.size(); ++g) {
        double d = d_ang(poses[i].rotation, sc.gt_pose.rotation * group[g]);
        if (d < nearest) nearest = d, arg = g;
      }
      worst = std::max(worst, nearest);
      if (nearest < 3 * kDeg) hit.insert(arg);
    }
    v.check(best.size() == 6, fmt("hex_prism: %zu modes, %zu poses", best.size(), poses.size()));
    v.check(hit.size() == 6 && worst < 3 * kDeg,
            fmt("hex_prism: %zu of 6 symmetric images matched, worst mode offset %.3f deg", hit.size(),
                worst / kDeg));
    v.check(e.seconds < 60, fmt("hex_prism: %.1f s", e.seconds));
  }
  {
    const auto& m = model_for("cylinder");
    auto sc = default_scenario("cylinder", 1);
    auto e = estimate(m, sc);
    auto t0 = Clock::now();
    auto gt = gt_pose_set(m, sc.gt_pose, m.symmetry, false, nullptr, 1.0);
    auto pr = pr_report(e.dist.poses, gt, m, sc.camera);
    double secs = e.seconds + seconds_since(t0);
    v.check(pr.recall_msd >= 0.9, fmt("cylinder: recall_msd %.3f against %zu orbit poses (threshold %.4f m), "
                                      "precision_msd %.3f, %zu poses",
                                      pr.recall_msd, gt.poses.size(), pr.threshold_msd_m, pr.precision_msd,
                                      e.dist.poses.size()));
    v.check(secs < 60, fmt("cylinder: %.1f s", secs));
  }
  v.note("timings cover render, matching, estimation and metrics; models are built once beforehand");
  return v;
}

Verdict occlusion_pair() {
  Verdict v;
  const auto& m = model_for("marked_prism");
  for (bool hidden : {false, true}) {
    auto sc = default_scenario("marked_prism", 1);
    if (hidden) sc.occluder = top_cap_occluder(m.mesh, sc.camera, sc.gt_pose);
    auto e = estimate(m, sc);
    auto gt = gt_pose_set(m, sc.gt_pose, m.symmetry, true, &e.obs, 1.0, &e.cache.log_z);
    auto pr = pr_report(e.dist.poses, gt, m, sc.camera);
    int modes = count_modes(poses_of(e.dist));
    const char* tag = hidden ? "marker occluded" : "marker visible";
    std::size_t want = hidden ? 6 : 1;
    v.check(gt.poses.size() == want,
            fmt("%s: score-equivalence set has %zu pose(s), expected %zu", tag, gt.poses.size(), want));
    v.check(modes == static_cast<int>(want), fmt("%s: %d mode(s), expected %zu", tag, modes, want));
    v.check(pr.recall_mpd >= 0.9 && pr.recall_msd >= 0.9 && pr.precision_mpd >= 0.8 && pr.precision_msd >= 0.8,
            fmt("%s: P/R mpd %.3f/%.3f, msd %.3f/%.3f", tag, pr.precision_mpd, pr.recall_mpd, pr.precision_msd,
                pr.recall_msd));
  }
  return v;
}

// Log-partition of one descriptor against every model descriptor, computed
// directly.
double direct_log_z(const SymModel& m, const Eigen::VectorXd& d) {
  Eigen::VectorXd s = m.params.beta * (m.descriptors.transpose() * d);
  double mx = s.maxCoeff();
  return mx + std::log((s.array() - mx).exp().sum());
}

Verdict loss_floor() {
  Verdict v;
  for (const auto& name : bundled_object_names()) {
    const auto& m = model_for(name, 20000);
    std::vector<Observation> obs;
    for (const auto& sc : random_noiseless_scenarios(m.mesh, 20, 100)) obs.push_back(render(m, sc));
    Losses l = eval_losses(m, obs);
    std::map<int, double> log_z;
    double floor = 0;
    std::size_t n = 0;
    for (const auto& o : obs) {
      for (std::size_t j = 0; j < o.mask_count(); ++j) {
        int g = o.gt_point[j];
        if (g < 0) continue;
        Eigen::VectorXd d = o.descriptors.col(static_cast<Eigen::Index>(j));
        auto it = log_z.find(g);
        if (it == log_z.end()) it = log_z.emplace(g, direct_log_z(m, d)).first;
        floor += it->second - m.params.beta * d.dot(m.descriptors.col(g));
        ++n;
      }
    }
    floor /= static_cast<double>(n);
    v.check(l.lf < 1e-6, fmt("%s: L_LF %.3g rad over %zu pixels", name.c_str(), l.lf, l.pixels));
    v.check(l.pixels == n && std::abs(l.desc - floor) < 1e-3,
            fmt("%s: L_desc %.6f, brute-force floor %.6f", name.c_str(), l.desc, floor));
  }
  v.note("20 random noiseless renders per object, 20000-point models");
  return v;
}

Verdict p3p_pnp() {
  Verdict v;
  auto k = default_camera();
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> box(-0.05, 0.05), depth(0.3, 1.0), px(0.0, 128.0), u01(0.0, 1.0);
  int found = 0;
  double worst_residual = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Pose gt{random_rotation(rng), Vec3(box(rng), box(rng), depth(rng))};
    std::array<Vec3, 3> x;
    std::array<Vec2, 3> p;
    for (int i = 0; i < 3; ++i) {
      x[i] = Vec3(box(rng), box(rng), box(rng));
      p[i] = project(k, gt, x[i]);
    }
    bool hit = false;
    try {
      for (const auto& s : p3p_solve(k, p, x)) {
        double r = 0;
        for (int i = 0; i < 3; ++i) r = std::max(r, reprojection_error(k, s, p[i], x[i]));
        worst_residual = std::max(worst_residual, r);
        hit = hit || (d_ang(s.rotation, gt.rotation) < 1e-6 && (s.translation - gt.translation).norm() < 1e-6 && r < 1e-6);
      }
    } catch (const Error&) {
    }
    found += hit;
  }
  v.check(found == 1000 && worst_residual < 1e-6,
          fmt("P3P: ground truth among solutions in %d/1000 instances, worst residual %.2e px", found,
              worst_residual));

  const double diameter = 0.1 * std::sqrt(3.0);
  int ok = 0;
  double worst_r = 0, worst_t = 0;
  for (int s = 0; s < 100; ++s) {
    std::mt19937_64 r(1000 + s);
    Pose gt{random_rotation(r), Vec3(box(r) * 0.2, box(r) * 0.2, 0.5)};
    std::vector<Pnp2d3d> corr;
    for (int i = 0; i < 100; ++i) {
      Vec3 x(box(r), box(r), box(r));
      Vec2 p = project(k, gt, x);
      if (u01(r) < 0.4) p = Vec2(px(r), px(r));
      corr.push_back({p, x});
    }
    auto res = pnp_ransac(k, corr, {}, {}, static_cast<std::uint64_t>(s));
    if (!res) continue;
    double dr = d_ang(res->pose.rotation, gt.rotation);
    double dt = (res->pose.translation - gt.translation).norm();
    worst_r = std::max(worst_r, dr);
    worst_t = std::max(worst_t, dt);
    ok += dr < 1 * kDeg && dt < 0.01 * diameter;
  }
  v.check(ok >= 99, fmt("PnP-RANSAC, 40%% outliers: %d/100 seeds within 1 deg / 1%% (worst %.3f deg, %.3f%%)", ok,
                        worst_r / kDeg, 100 * worst_t / diameter));
  return v;
}

double halton(std::uint64_t i, int base) {
  double f = 1, r = 0;
  while (i) {
    f /= base;
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

double coefficient_of_variation(const std::vector<double>& c) {
  double mean = 0, var = 0;
  for (double x : c) mean += x;
  mean /= static_cast<double>(c.size());
  for (double x : c) var += (x - mean) * (x - mean);
  var /= static_cast<double>(c.size());
  return std::sqrt(var) / mean;
}

Verdict grid() {
  Verdict v;
  std::mt19937_64 rng(7);
  for (int k = 0; k <= 5; ++k) {
    So3Grid g(k);
    const std::uint64_t want = 72ull * (1ull << (3 * k));
    std::uint64_t fixed = 0;
    for (CellId c = 0; c < g.cell_count(); ++c) fixed += g.bin_of(g.representative(c)) == c;
    bool in_range = true;
    for (int i = 0; i < 20000; ++i) in_range = in_range && g.bin_of(random_rotation(rng)) < want;
    v.check(g.cell_count() == want && fixed == want && in_range,
            fmt("k=%d: %llu cells, %llu representatives map back to their own cell", k,
                static_cast<unsigned long long>(g.cell_count()), static_cast<unsigned long long>(fixed)));
  }

  // Cell volumes at k = 2 from 1e7 low-discrepancy uniform rotations
  // (Shoemake map of a Halton sequence), randomly rotated.
  So3Grid g2(2);
  const std::uint64_t n = 10000000;
  Rotation offset = random_rotation(rng);
  std::vector<double> qmc(g2.cell_count(), 0.0), iid(g2.cell_count(), 0.0);
  for (std::uint64_t i = 1; i <= n; ++i) {
    double u1 = halton(i, 2), u2 = halton(i, 3), u3 = halton(i, 5);
    double a = std::sqrt(1 - u1), b = std::sqrt(u1);
    Quat q(b * std::cos(2 * kPi * u3), a * std::sin(2 * kPi * u2), a * std::cos(2 * kPi * u2), b * std::sin(2 * kPi * u3));
    qmc[g2.bin_of(offset * Rotation::from_quaternion(q))] += 1;
    iid[g2.bin_of(random_rotation(rng))] += 1;
  }
  double cv_qmc = coefficient_of_variation(qmc);
  double cv_iid = coefficient_of_variation(iid);
  double per_cell = static_cast<double>(n) / static_cast<double>(g2.cell_count());
  double poisson = 1.0 / std::sqrt(per_cell);
  double corrected = std::sqrt(std::max(0.0, cv_iid * cv_iid - poisson * poisson));
  v.check(cv_qmc < 0.02, fmt("k=2 volume CV %.4f from 1e7 Halton rotations", cv_qmc));
  v.note(fmt("i.i.d. sampling: raw CV %.4f, counting noise alone %.4f, noise-corrected %.4f", cv_iid, poisson,
             corrected));

  std::vector<Rotation> hyp;
  for (int i = 0; i < 200000; ++i) hyp.push_back(random_rotation(rng));
  auto h = density(So3Grid(5), hyp);
  bool exact = true;
  for (int k = 4; k >= 0; --k) {
    h = h.aggregate_to_parent();
    auto direct = density(So3Grid(k), hyp);
    exact = exact && h.counts() == direct.counts();
  }
  v.check(exact, "aggregating k=5 counts down to k=0 equals direct binning at every level");
  return v;
}

struct SweepCheck {
  bool p_up = true, r_down = true;
};

SweepCheck directions(const std::vector<SweepRow>& rows) {
  SweepCheck c;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& a = rows[i - 1].run.pr;
    const auto& b = rows[i].run.pr;
    c.p_up = c.p_up && b.precision_mpd >= a.precision_mpd && b.precision_msd >= a.precision_msd;
    c.r_down = c.r_down && b.recall_mpd <= a.recall_mpd && b.recall_msd <= a.recall_msd;
  }
  return c;
}

std::string sweep_table(const std::vector<SweepRow>& rows) {
  std::string s;
  for (const auto& r : rows) {
    s += fmt("\n         %-5g poses %4zu  P/R mpd %.3f/%.3f  msd %.3f/%.3f", r.value, r.run.distribution.poses.size(),
             r.run.pr.precision_mpd, r.run.pr.recall_mpd, r.run.pr.precision_msd, r.run.pr.recall_msd);
  }
  return s;
}

Verdict ablations(const fs::path& out) {
  Verdict v;
  const auto& m = model_for("marked_prism");
  auto sc = ablation_scenario(m);
  RunManifest man;
  man.seed = 1;
  v.note("scenario: marked_prism, top occluded, noise_desc 0.4, noise_frame 0.2, noise_mask 2, outlier_rate 0.3");

  struct Axis {
    SweepAxis axis;
    std::vector<double> values;
  };
  for (const auto& [axis, values] : std::vector<Axis>{{SweepAxis::kTauScore, {0.80, 0.85, 0.90, 0.95}},
                                                       {SweepAxis::kTauDens, {5, 10, 15, 20}},
                                                       {SweepAxis::kGridLevel, {3, 4, 5, 6}}}) {
    auto t0 = Clock::now();
    auto rows = run_sweep(man, m, sc, axis, values);
    double secs = seconds_since(t0);
    write_text(out / ("sweep_" + to_string(axis) + ".csv"), sweep_csv(rows, axis));
    std::string name = to_string(axis);
    if (axis == SweepAxis::kGridLevel) {
      for (const char* metric : {"mpd", "msd"}) {
        std::vector<double> r;
        for (const auto& row : rows) r.push_back(metric[1] == 'p' ? row.run.pr.recall_mpd : row.run.pr.recall_msd);
        double inner = *std::max_element(r.begin() + 1, r.end() - 1);
        v.check(inner > r.front() && inner > r.back(),
                fmt("k: recall_%s interior maximum %.3f vs endpoints %.3f, %.3f", metric, inner, r.front(), r.back()));
      }
    } else {
      auto c = directions(rows);
      v.check(c.p_up, name + ": precision non-decreasing (mpd and msd)");
      v.check(c.r_down, name + ": recall non-increasing (mpd and msd)");
    }
    v.check(secs < 600, fmt("%s sweep: %.1f s", name.c_str(), secs) + sweep_table(rows));
  }
  return v;
}

Verdict concentration() {
  Verdict v;
  const auto& m = model_for("hex_prism");
  auto sc = default_scenario("hex_prism", 1);
  sc.outlier_rate = 0.3;
  const int n = m.symmetry.order;
  Observation obs = render(m, sc);
  EstimatorParams p;
  MatchCache cache = build_match_cache(obs, m, p.tau_desc, 1);
  EstimateTrace trace;
  estimate_distribution(obs, m, cache, p, &trace);

  auto to_pnp = [&](const Correspondence& c) {
    return Pnp2d3d{obs.pixels[c.pixel].cast<double>(), m.points[c.point]};
  };
  std::vector<Pnp2d3d> all;
  std::size_t in_groups = 0, consistent = 0;
  std::vector<Pose> poses;
  for (std::size_t gi = 0; gi < trace.groups.size(); ++gi) {
    std::vector<Pnp2d3d> corr;
    for (const auto& c : trace.groups[gi]) corr.push_back(to_pnp(c));
    all.insert(all.end(), corr.begin(), corr.end());
    in_groups += corr.size();
    if (corr.size() < 3) continue;
    auto res = pnp_ransac(obs.camera, corr, p.ransac, p.refine, 17 + gi);
    if (!res) continue;
    consistent += res->inliers.size();
    poses.push_back(res->pose);
  }
  const double thr2 = p.ransac.threshold_px * p.ransac.threshold_px;
  std::size_t best_global = 0;
  for (const auto& pose : poses) {
    std::size_t c = 0;
    for (const auto& x : all) {
      Vec3 xc = pose * x.point;
      if (xc.z() <= 0) continue;
      c += (project_camera_point(obs.camera, xc) - x.pixel).squaredNorm() < thr2;
    }
    best_global = std::max(best_global, c);
  }
  double c_group = static_cast<double>(consistent) / static_cast<double>(in_groups);
  double c_global = static_cast<double>(best_global) / static_cast<double>(all.size());
  double ratio = c_group / c_global;
  v.note(fmt("%zu groups, %zu pruned correspondences, outlier_rate 0.3", trace.groups.size(), all.size()));
  v.check(ratio >= n / 2.0, fmt("per-bin consistency %.3f, best single pose over all %.3f, ratio %.2f (need >= %.1f)",
                                c_group, c_global, ratio, n / 2.0));
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Verdict determinism(const fs::path& out) {
  Verdict v;
  struct Case {
    std::string object;
    bool ablation;
  };
  for (const auto& [object, noisy] : std::vector<Case>{{"hex_prism", false}, {"marked_prism", true}}) {
    const auto& m = model_for(object);
    auto sc = noisy ? ablation_scenario(m) : default_scenario(object, 1);
    RunManifest man;
    man.seed = 3;
    std::vector<fs::path> dirs;
    for (int threads : {1, 1, 3}) {
      man.params.threads = threads;
      fs::path d = out / "determinism" / fmt("%s_%zu_t%d", object.c_str(), dirs.size(), threads);
      write_run_outputs(run_pipeline(man, m, sc), d);
      dirs.push_back(d);
    }
    for (const char* f : {"distribution.json", "pr_report.json", "gt_set.json"}) {
      auto a = slurp(dirs[0] / f);
      v.check(!a.empty() && a == slurp(dirs[1] / f) && a == slurp(dirs[2] / f),
              fmt("%s %s: identical across two sequential runs and a 3-thread run", object.c_str(), f));
    }
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"posedist acceptance suite"};
  bool strict = false;
  std::string out_dir = "acceptance_out";
  std::vector<std::string> only;
  app.add_flag("--strict", strict, "Exit nonzero when any criterion fails");
  app.add_option("--output-dir", out_dir, "Report and sweep CSV directory");
  app.add_option("--only", only, "Run only the named criteria");
  CLI11_PARSE(app, argc, argv);

  fs::path out(out_dir);
  fs::create_directories(out);

  std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"symmetry_modes", symmetry_modes},
      {"occlusion_ambiguity", occlusion_pair},
      {"loss_floor", loss_floor},
      {"p3p_pnp", p3p_pnp},
      {"so3_grid", grid},
      {"ablation_trends", [&] { return ablations(out); }},
      {"bin_concentration", concentration},
      {"determinism", [&] { return determinism(out); }},
  };

  std::ofstream report(out / "acceptance_report.txt");
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    auto t0 = Clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.check(false, std::string("exception: ") + e.what());
    }
    failed += !v.pass;
    std::string head = fmt("%s %-20s (%.1f s)", v.pass ? "PASS" : "FAIL", name.c_str(), seconds_since(t0));
    std::printf("%s\n", head.c_str());
    report << head << "\n";
    for (const auto& l : v.lines) report << l << "\n";
    std::fflush(stdout);
  }
  std::printf("%d criteria failed; details in %s\n", failed, (out / "acceptance_report.txt").string().c_str());
  return strict && failed ? 1 : 0;
}
