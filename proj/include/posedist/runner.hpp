#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "posedist/metrics.hpp"

namespace posedist {

/// JSON run description. Relative paths resolve against the manifest's
/// directory.
struct RunManifest {
  std::filesystem::path model_path;
  std::filesystem::path scenario_path;
  EstimatorParams params;
  PrThresholds thresholds;
  bool gt_occlusion_aware = true;
  double gt_step_deg = 1.0;
  std::filesystem::path output_dir;
  /// RANSAC seed; copied into params.seed.
  std::uint64_t seed = 0;
};

Json manifest_to_json(const RunManifest& m);
/// Throws kFormat on malformed JSON, kInvalidArgument on bad values.
RunManifest manifest_from_json(const Json& j, const std::filesystem::path& base_dir = {});
RunManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const RunManifest& m, const std::filesystem::path& path);

/// Hash of the manifest settings together with the model and scenario
/// contents (paths and output directory excluded).
std::string manifest_hash(const RunManifest& m, const SymModel& model, const ScenarioConfig& scenario);

struct RunResult {
  PoseDistribution distribution;
  GtPoseSet gt;
  PrReport pr;
  std::string hash;
  std::optional<EstimateTrace> trace;
};

/// Render -> match -> estimate -> metrics. A cache built for the same
/// observation and tau_desc may be passed to skip matching.
RunResult run_pipeline(const RunManifest& m, const SymModel& model, const ScenarioConfig& scenario,
                       bool keep_trace = false, const MatchCache* cache = nullptr);

Json run_to_json(const RunResult& r);

/// Writes distribution.json, pr_report.json, pr_curves.csv, gt_set.json and
/// mollweide.svg; with a trace also stage_{initial,pruned,final}.svg. Returns
/// the written paths.
std::vector<std::filesystem::path> write_run_outputs(const RunResult& r, const std::filesystem::path& dir);

enum class SweepAxis { kGridLevel, kTauCorr, kTauDens, kTauScore };
SweepAxis sweep_axis_from_string(const std::string& s);
std::string to_string(SweepAxis a);

struct SweepRow {
  double value = 0.0;
  RunResult run;
};

/// Re-runs estimation per value with everything else fixed; matching is
/// shared unless the axis is tau_corr.
std::vector<SweepRow> run_sweep(const RunManifest& m, const SymModel& model, const ScenarioConfig& scenario,
                                SweepAxis axis, const std::vector<double>& values);

std::string sweep_csv(const std::vector<SweepRow>& rows, SweepAxis axis);

/// At most `cap` rotations, taken at a fixed stride.
std::vector<Rotation> thin_rotations(const std::vector<Rotation>& r, std::size_t cap);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace posedist
