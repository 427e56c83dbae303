#include "posedist/runner.hpp"

#include <fstream>
#include <sstream>

#include "posedist/error.hpp"
#include "posedist/mollweide.hpp"

namespace posedist {
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kStagePointCap = 20000;

fs::path resolve(const fs::path& p, const fs::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

std::string scenario_hash(const ScenarioConfig& s) {
  std::string text = scenario_to_json(s).dump();
  return hex64(fnv1a(text.data(), text.size()));
}

std::vector<Rotation> pose_rotations(const std::vector<ScoredPose>& poses) {
  std::vector<Rotation> out;
  for (const auto& p : poses) out.push_back(p.pose.rotation);
  return out;
}

std::vector<Rotation> pose_rotations(const std::vector<Pose>& poses) {
  std::vector<Rotation> out;
  for (const auto& p : poses) out.push_back(p.rotation);
  return out;
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  f << text;
  if (!f) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

Json manifest_to_json(const RunManifest& m) {
  return {{"model_path", m.model_path.generic_string()},
          {"scenario_path", m.scenario_path.generic_string()},
          {"output_dir", m.output_dir.generic_string()},
          {"seed", m.seed},
          {"estimator", params_to_json(m.params)},
          {"metrics", {{"mpd_threshold_px", m.thresholds.mpd_px},
                       {"msd_threshold_m", m.thresholds.msd_m},
                       {"gt_occlusion_aware", m.gt_occlusion_aware},
                       {"gt_step_deg", m.gt_step_deg}}}};
}

RunManifest manifest_from_json(const Json& j, const fs::path& base_dir) {
  RunManifest m;
  try {
    m.model_path = resolve(j.at("model_path").get<std::string>(), base_dir);
    m.scenario_path = resolve(j.at("scenario_path").get<std::string>(), base_dir);
    m.output_dir = resolve(j.value("output_dir", std::string()), base_dir);
    m.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("metrics")) {
      const auto& mt = j["metrics"];
      m.thresholds.mpd_px = mt.value("mpd_threshold_px", 0.0);
      m.thresholds.msd_m = mt.value("msd_threshold_m", 0.0);
      m.gt_occlusion_aware = mt.value("gt_occlusion_aware", true);
      m.gt_step_deg = mt.value("gt_step_deg", 1.0);
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("bad manifest: ") + e.what());
  }
  m.params = params_from_json(j.value("estimator", Json::object()));
  m.params.seed = m.seed;
  if (!(m.gt_step_deg > 0.0)) throw Error(ErrorCode::kInvalidArgument, "gt_step_deg must be > 0");
  return m;
}

RunManifest load_manifest(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::kIo, "cannot open manifest " + path.string());
  Json j;
  try {
    j = Json::parse(f);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kFormat, "manifest " + path.string() + ": " + e.what());
  }
  return manifest_from_json(j, path.parent_path());
}

void save_manifest(const RunManifest& m, const fs::path& path) { write_text(path, manifest_to_json(m).dump(2) + "\n"); }

std::string manifest_hash(const RunManifest& m, const SymModel& model, const ScenarioConfig& scenario) {
  Json j = manifest_to_json(m);
  j.erase("model_path");
  j.erase("scenario_path");
  j.erase("output_dir");
  j["estimator"]["seed"] = m.seed;
  j["model_hash"] = hex64(model_hash(model));
  j["scenario"] = scenario_to_json(scenario);
  std::string text = j.dump();
  return hex64(fnv1a(text.data(), text.size()));
}

RunResult run_pipeline(const RunManifest& m, const SymModel& model, const ScenarioConfig& scenario,
                       bool keep_trace, const MatchCache* cache) {
  EstimatorParams params = m.params;
  params.seed = m.seed;
  params.validate();
  RunResult r;
  r.hash = manifest_hash(m, model, scenario);
  Observation obs = render(model, scenario);
  MatchCache own;
  if (!cache || cache->tau_desc != params.tau_desc) {
    own = build_match_cache(obs, model, params.tau_desc, params.threads);
    cache = &own;
  }
  EstimateTrace trace;
  r.distribution = estimate_distribution(obs, model, *cache, params, keep_trace ? &trace : nullptr);
  r.distribution.scenario_hash = scenario_hash(scenario);
  r.distribution.model_hash = hex64(model_hash(model));
  if (keep_trace) r.trace = std::move(trace);
  r.gt = gt_pose_set(model, scenario.gt_pose, model.symmetry, m.gt_occlusion_aware, &obs, m.gt_step_deg,
                     &cache->log_z);
  r.pr = pr_report(r.distribution.poses, r.gt, model, scenario.camera, m.thresholds);
  return r;
}

Json run_to_json(const RunResult& r) {
  Json d = distribution_to_json(r.distribution);
  d["manifest_hash"] = r.hash;
  return d;
}

std::vector<fs::path> write_run_outputs(const RunResult& r, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  auto put = [&](const std::string& name, const std::string& text) {
    write_text(dir / name, text);
    written.push_back(dir / name);
  };
  put("distribution.json", run_to_json(r).dump(2) + "\n");
  Json pr = pr_to_json(r.pr);
  pr["manifest_hash"] = r.hash;
  put("pr_report.json", pr.dump(2) + "\n");
  put("pr_curves.csv", "# manifest_hash=" + r.hash + "\n" + pr_curves_csv(r.pr));
  Json gt = gt_set_to_json(r.gt);
  gt["manifest_hash"] = r.hash;
  put("gt_set.json", gt.dump(2) + "\n");

  const auto gt_rot = pose_rotations(r.gt.poses);
  MollweidePlot final_plot;
  final_plot.title = "final rotations";
  final_plot.points = pose_rotations(r.distribution.poses);
  for (const auto& p : r.distribution.poses) final_plot.weights.push_back(p.gamma);
  final_plot.ground_truth = gt_rot;
  final_plot.provenance = "manifest_hash " + r.hash;
  if (!r.distribution.found) final_plot.warning = "NoPoseFound: no pose passed the filters";
  put("mollweide.svg", mollweide_svg(final_plot));
  if (r.trace) {
    MollweidePlot initial{"initial hypotheses", thin_rotations(r.trace->initial, kStagePointCap), {}, gt_rot, {},
                          final_plot.provenance};
    MollweidePlot pruned{"density-pruned hypotheses", thin_rotations(r.trace->pruned, kStagePointCap), {}, gt_rot,
                         {}, final_plot.provenance};
    put("stage_initial.svg", mollweide_svg(initial));
    put("stage_pruned.svg", mollweide_svg(pruned));
    final_plot.title = "final rotations";
    put("stage_final.svg", mollweide_svg(final_plot));
  }
  return written;
}

SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "k") return SweepAxis::kGridLevel;
  if (s == "tau_corr") return SweepAxis::kTauCorr;
  if (s == "tau_dens") return SweepAxis::kTauDens;
  if (s == "tau_score") return SweepAxis::kTauScore;
  throw Error(ErrorCode::kInvalidArgument, "sweep axis must be one of k, tau_corr, tau_dens, tau_score");
}

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::kGridLevel: return "k";
    case SweepAxis::kTauCorr: return "tau_corr";
    case SweepAxis::kTauDens: return "tau_dens";
    case SweepAxis::kTauScore: return "tau_score";
  }
  return "?";
}

std::vector<SweepRow> run_sweep(const RunManifest& m, const SymModel& model, const ScenarioConfig& scenario,
                                SweepAxis axis, const std::vector<double>& values) {
  std::vector<RunManifest> runs;
  for (double v : values) {
    RunManifest mv = m;
    switch (axis) {
      case SweepAxis::kGridLevel:
        if (v != std::floor(v)) throw Error(ErrorCode::kInvalidArgument, "k values must be integers");
        mv.params.grid_level = static_cast<int>(v);
        break;
      case SweepAxis::kTauCorr: mv.params.tau_desc = v; break;
      case SweepAxis::kTauDens:
        if (v < 0 || v != std::floor(v)) throw Error(ErrorCode::kInvalidArgument, "tau_dens values must be counts");
        mv.params.tau_dens = static_cast<std::uint64_t>(v);
        break;
      case SweepAxis::kTauScore: mv.params.tau_score = v; break;
    }
    mv.params.validate();
    runs.push_back(mv);
  }
  std::vector<SweepRow> rows;
  std::optional<MatchCache> cache;
  if (axis != SweepAxis::kTauCorr) {
    Observation obs = render(model, scenario);
    cache = build_match_cache(obs, model, m.params.tau_desc, m.params.threads);
  }
  for (std::size_t i = 0; i < runs.size(); ++i) {
    rows.push_back({values[i], run_pipeline(runs[i], model, scenario, false, cache ? &*cache : nullptr)});
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows, SweepAxis axis) {
  std::ostringstream os;
  os.precision(17);
  os << to_string(axis)
     << ",poses,modes,precision_mpd,recall_mpd,precision_msd,recall_msd,best_mspd_px,best_mssd_m,manifest_hash\n";
  for (const auto& r : rows) {
    std::vector<Pose> poses;
    for (const auto& p : r.run.distribution.poses) poses.push_back(p.pose);
    os << r.value << ',' << poses.size() << ',' << count_modes(poses) << ',' << r.run.pr.precision_mpd << ','
       << r.run.pr.recall_mpd << ',' << r.run.pr.precision_msd << ',' << r.run.pr.recall_msd << ','
       << r.run.pr.best_mspd_px << ',' << r.run.pr.best_mssd_m << ',' << r.run.hash << '\n';
  }
  return os.str();
}

std::vector<Rotation> thin_rotations(const std::vector<Rotation>& r, std::size_t cap) {
  if (r.size() <= cap) return r;
  std::vector<Rotation> out;
  out.reserve(cap);
  for (std::size_t i = 0; i < cap; ++i) out.push_back(r[i * r.size() / cap]);
  return out;
}

}  // namespace posedist
