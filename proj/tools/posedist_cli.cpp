#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "posedist/error.hpp"
#include "posedist/losses.hpp"
#include "posedist/runner.hpp"
#include "posedist/scenarios.hpp"

using namespace posedist;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNoPose = 3;
constexpr int kExitIo = 4;

fs::path default_output_dir() {
  if (const char* env = std::getenv("POSEDIST_OUTPUT_DIR"); env && *env) return env;
  return "posedist_out";
}

Json read_json(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw Error(ErrorCode::kIo, "cannot open " + p.string());
  try {
    return Json::parse(f);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kFormat, p.string() + ": " + e.what());
  }
}

std::vector<double> parse_values(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "bad sweep value '" + item + "'");
    }
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidArgument, "no sweep values");
  return out;
}

struct EstimatorOverrides {
  std::optional<int> k;
  std::optional<std::uint64_t> tau_dens;
  std::optional<double> tau_score;
  std::optional<double> tau_corr;
  std::optional<int> threads;

  void add(CLI::App* app) {
    app->add_option("--k", k, "SO(3) grid level");
    app->add_option("--tau-dens", tau_dens, "minimum hypotheses per bin");
    app->add_option("--tau-score", tau_score, "score filter threshold");
    app->add_option("--tau-corr", tau_corr, "descriptor ratio threshold");
    app->add_option("--threads", threads, "worker threads (0 = all cores)");
  }
  void apply(EstimatorParams& p) const {
    if (k) p.grid_level = *k;
    if (tau_dens) p.tau_dens = *tau_dens;
    if (tau_score) p.tau_score = *tau_score;
    if (tau_corr) p.tau_desc = *tau_corr;
    if (threads) p.threads = *threads;
  }
};

struct Loaded {
  RunManifest manifest;
  SymModel model;
  ScenarioConfig scenario;
};

Loaded load_run(const fs::path& manifest_path, std::optional<std::uint64_t> seed, const EstimatorOverrides& o,
                const std::string& out_flag) {
  Loaded l{load_manifest(manifest_path), {}, {}};
  if (seed) l.manifest.seed = *seed;
  o.apply(l.manifest.params);
  l.manifest.params.seed = l.manifest.seed;
  l.manifest.params.validate();
  if (!out_flag.empty()) l.manifest.output_dir = out_flag;
  if (l.manifest.output_dir.empty()) l.manifest.output_dir = default_output_dir();
  l.model = load_model(l.manifest.model_path);
  l.scenario = load_scenario(l.manifest.scenario_path);
  return l;
}

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kFormat:
    case ErrorCode::kLevelTooLarge:
    case ErrorCode::kDegenerateMesh:
    case ErrorCode::kEmptyGt:
      return kExitValidation;
    case ErrorCode::kIo:
      return kExitIo;
    default:
      return kExitOther;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pose distributions from ambiguous 2D-3D correspondences"};
  app.require_subcommand(1);

  // build-model
  auto* build = app.add_subcommand("build-model", "sample a symmetry-aware model from a mesh");
  std::string b_object, b_mesh, b_sym, b_out;
  int b_points = 50000, b_dim = 64;
  std::uint64_t b_seed = 0;
  build->add_option("--object", b_object, "bundled object: " + [] {
    std::string s;
    for (const auto& n : bundled_object_names()) s += (s.empty() ? "" : ", ") + n;
    return s;
  }());
  build->add_option("--mesh", b_mesh, "ASCII PLY mesh");
  build->add_option("--symmetry", b_sym, "symmetry spec JSON (with --mesh)");
  build->add_option("--out", b_out, "output model file")->required();
  build->add_option("--max-points", b_points, "number of surface points");
  build->add_option("--descriptor-dim", b_dim, "descriptor dimension");
  build->add_option("--seed", b_seed, "sampling and feature seed");

  // init
  auto* init = app.add_subcommand("init", "write a model, scenario and manifest for a bundled object");
  std::string i_object, i_dir;
  bool i_occlude = false;
  std::uint64_t i_seed = 0;
  double i_noise_desc = 0.0, i_noise_frame = 0.0, i_outliers = 0.0;
  int i_noise_mask = 0, i_points = 50000;
  init->add_option("--object", i_object, "bundled object")->required();
  init->add_option("--dir", i_dir, "output directory")->required();
  init->add_flag("--occlude-top", i_occlude, "occlude the top cap of a prism");
  init->add_option("--noise-desc-rad", i_noise_desc, "descriptor noise sigma");
  init->add_option("--noise-frame-rad", i_noise_frame, "frame noise sigma");
  init->add_option("--noise-mask-px", i_noise_mask, "mask boundary noise width");
  init->add_option("--outlier-rate", i_outliers, "fraction of outlier pixels");
  init->add_option("--max-points", i_points, "number of model points");
  init->add_option("--seed", i_seed, "seed for model, scenario and estimator");

  // run
  auto* run = app.add_subcommand("run", "render, match, estimate and evaluate one manifest");
  std::string r_manifest, r_out;
  std::optional<std::uint64_t> r_seed;
  bool r_dump = false;
  EstimatorOverrides r_over;
  run->add_option("manifest", r_manifest, "run manifest JSON")->required();
  run->add_option("--output-dir", r_out, "output directory (default: manifest, then $POSEDIST_OUTPUT_DIR)");
  run->add_option("--seed", r_seed, "RANSAC seed (overrides the manifest)");
  run->add_flag("--dump-stages", r_dump, "also plot initial, pruned and final rotation sets");
  r_over.add(run);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "re-run estimation over one hyperparameter");
  std::string s_manifest, s_axis, s_values, s_out;
  std::optional<std::uint64_t> s_seed;
  EstimatorOverrides s_over;
  sweep->add_option("manifest", s_manifest, "run manifest JSON")->required();
  sweep->add_option("--axis", s_axis, "k, tau_corr, tau_dens or tau_score")->required();
  sweep->add_option("--values", s_values, "comma-separated values")->required();
  sweep->add_option("--output-dir", s_out, "output directory");
  sweep->add_option("--seed", s_seed, "RANSAC seed (overrides the manifest)");
  s_over.add(sweep);

  // losses
  auto* losses = app.add_subcommand("losses", "evaluate the descriptor and frame losses");
  std::string l_model, l_scenario;
  int l_renders = 20, l_threads = 1;
  std::uint64_t l_seed = 0;
  losses->add_option("--model", l_model, "model file")->required();
  losses->add_option("--scenario", l_scenario, "scenario JSON (default: random noiseless renders)");
  losses->add_option("--renders", l_renders, "number of random renders");
  losses->add_option("--threads", l_threads, "worker threads");
  losses->add_option("--seed", l_seed, "seed for the random poses");

  // gt-set
  auto* gtset = app.add_subcommand("gt-set", "dump the ground-truth pose set of a scenario");
  std::string g_model, g_scenario;
  bool g_aware = false;
  double g_step = 1.0;
  std::uint64_t g_seed = 0;
  gtset->add_option("--model", g_model, "model file")->required();
  gtset->add_option("--scenario", g_scenario, "scenario JSON")->required();
  gtset->add_flag("--occlusion-aware", g_aware, "keep only symmetries with equal score on the render");
  gtset->add_option("--step-deg", g_step, "orbit step for continuous symmetries");
  gtset->add_option("--seed", g_seed, "overrides the scenario seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*build) {
      if (b_object.empty() == b_mesh.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "give exactly one of --object or --mesh");
      }
      TriMesh mesh;
      SymmetrySpec sym;
      if (!b_object.empty()) {
        auto bo = bundled_object(b_object);
        mesh = std::move(bo.mesh);
        sym = bo.symmetry;
      } else {
        if (b_sym.empty()) throw Error(ErrorCode::kInvalidArgument, "--mesh needs --symmetry");
        mesh = read_ply(b_mesh);
        sym = symmetry_from_json(read_json(b_sym));
      }
      SymModelParams p;
      p.max_points = b_points;
      p.descriptor_dim = b_dim;
      p.seed = b_seed;
      SymModel model = build_symmodel(mesh, sym, p);
      save_model(model, b_out);
      std::cout << Json{{"model", b_out}, {"points", model.size()}, {"model_hash", hex64(model_hash(model))}}.dump(2)
                << "\n";
      return kExitOk;
    }

    if (*init) {
      auto bo = bundled_object(i_object);
      SymModelParams p;
      p.max_points = i_points;
      p.seed = i_seed;
      SymModel model = build_symmodel(bo.mesh, bo.symmetry, p);
      ScenarioConfig sc = default_scenario(i_object, i_seed);
      sc.noise_desc = i_noise_desc;
      sc.noise_frame = i_noise_frame;
      sc.noise_mask = i_noise_mask;
      sc.outlier_rate = i_outliers;
      if (i_occlude) sc.occluder = top_cap_occluder(model.mesh, sc.camera, sc.gt_pose);
      sc.validate();
      fs::path dir = i_dir;
      std::error_code ec;
      fs::create_directories(dir, ec);
      if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string());
      save_model(model, dir / "model.pdm");
      write_text(dir / "scenario.json", scenario_to_json(sc).dump(2) + "\n");
      RunManifest m;
      m.model_path = "model.pdm";
      m.scenario_path = "scenario.json";
      m.output_dir = "out";
      m.seed = i_seed;
      save_manifest(m, dir / "manifest.json");
      std::cout << (dir / "manifest.json").string() << "\n";
      return kExitOk;
    }

    if (*run) {
      Loaded l = load_run(r_manifest, r_seed, r_over, r_out);
      RunResult res = run_pipeline(l.manifest, l.model, l.scenario, r_dump);
      auto files = write_run_outputs(res, l.manifest.output_dir);
      Json summary = pr_to_json(res.pr);
      summary.erase("curve_mpd");
      summary.erase("curve_msd");
      summary["poses"] = res.distribution.poses.size();
      summary["status"] = res.distribution.found ? "ok" : "NoPoseFound";
      summary["manifest_hash"] = res.hash;
      summary["output_dir"] = l.manifest.output_dir.string();
      std::cout << summary.dump(2) << "\n";
      if (!res.distribution.found) {
        std::cerr << "NoPoseFound: no candidate pose passed the estimator filters\n";
        return kExitNoPose;
      }
      return kExitOk;
    }

    if (*sweep) {
      Loaded l = load_run(s_manifest, s_seed, s_over, s_out);
      SweepAxis axis = sweep_axis_from_string(s_axis);
      auto rows = run_sweep(l.manifest, l.model, l.scenario, axis, parse_values(s_values));
      std::string csv = sweep_csv(rows, axis);
      std::error_code ec;
      fs::create_directories(l.manifest.output_dir, ec);
      if (ec) throw Error(ErrorCode::kIo, "cannot create " + l.manifest.output_dir.string());
      write_text(l.manifest.output_dir / ("sweep_" + to_string(axis) + ".csv"), csv);
      std::cout << csv;
      return kExitOk;
    }

    if (*losses) {
      SymModel model = load_model(l_model);
      std::vector<ScenarioConfig> scenarios;
      if (!l_scenario.empty()) {
        scenarios.push_back(load_scenario(l_scenario));
      } else {
        if (l_renders <= 0) throw Error(ErrorCode::kInvalidArgument, "--renders must be > 0");
        scenarios = random_noiseless_scenarios(model.mesh, l_renders, l_seed);
      }
      std::vector<Observation> obs;
      for (const auto& s : scenarios) obs.push_back(render(model, s));
      Losses ls = eval_losses(model, obs, l_threads);
      std::cout << Json{{"loss_desc", ls.desc}, {"loss_lf_rad", ls.lf}, {"pixels", ls.pixels},
                        {"renders", obs.size()}, {"seed", l_seed}}.dump(2)
                << "\n";
      return kExitOk;
    }

    if (*gtset) {
      SymModel model = load_model(g_model);
      ScenarioConfig sc = load_scenario(g_scenario);
      if (gtset->count("--seed") > 0) sc.seed = g_seed;
      std::optional<Observation> obs;
      if (g_aware) obs = render(model, sc);
      GtPoseSet gt = gt_pose_set(model, sc.gt_pose, model.symmetry, g_aware, obs ? &*obs : nullptr, g_step);
      std::cout << gt_set_to_json(gt).dump(2) << "\n";
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitOther;
}
