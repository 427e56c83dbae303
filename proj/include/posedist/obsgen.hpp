#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "posedist/model_io.hpp"
#include "posedist/raster.hpp"
#include "posedist/symmodel.hpp"

namespace posedist {

struct ScenarioConfig {
  CameraIntrinsics camera;
  Pose gt_pose;
  /// Folded-normal sigma of the descriptor perturbation on the hypersphere.
  double noise_desc = 0.0;
  /// Folded-normal sigma of the per-pixel frame rotation noise.
  double noise_frame = 0.0;
  /// Pixels within this distance of the mask boundary flip with p = 1/2.
  int noise_mask = 0;
  /// Polygon in pixel coordinates; pixels whose centres fall inside are
  /// removed from the mask.
  std::vector<Vec2> occluder;
  double outlier_rate = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

Json scenario_to_json(const ScenarioConfig& c);
ScenarioConfig scenario_from_json(const Json& j);
ScenarioConfig load_scenario(const std::filesystem::path& path);

struct Observation {
  int width = 0;
  int height = 0;
  /// Row-major mask, 1 on object pixels.
  std::vector<std::uint8_t> mask;
  /// Mask pixel coordinates in row-major order; columns below follow it.
  std::vector<Eigen::Vector2i> pixels;
  /// Per image pixel, index into `pixels` or -1.
  std::vector<int> pixel_index;
  /// D x P descriptor image restricted to the mask.
  Eigen::MatrixXd descriptors;
  /// R_{C <- L_X} per mask pixel.
  std::vector<Rotation> frames;

  // Ground truth, for metrics and losses only.
  Pose gt_pose;
  CameraIntrinsics camera;
  SymmetrySpec symmetry;
  /// h(x): nearest model point, -1 for pixels added by mask noise.
  std::vector<int> gt_point;
  /// Exact rasterised surface point behind each mask pixel (object frame);
  /// NaN for pixels added by mask noise.
  std::vector<Vec3> gt_surface;
  /// Unoccluded, noise-free object mask.
  std::vector<std::uint8_t> object_mask;

  std::size_t mask_count() const { return pixels.size(); }
  bool in_mask(int u, int v) const {
    return u >= 0 && v >= 0 && u < width && v < height && mask[v * width + u] != 0;
  }
  int index_at(int u, int v) const {
    if (u < 0 || v < 0 || u >= width || v >= height) return -1;
    return pixel_index[v * width + u];
  }
};

/// Throws kObjectOutOfFrame, kEmptyMaskAfterOcclusion.
Observation render(const SymModel& model, const ScenarioConfig& config);

/// Unoccluded object mask at `pose`, same rasterisation as render.
std::vector<std::uint8_t> render_mask_only(const SymModel& model, const CameraIntrinsics& k,
                                           const Pose& pose);

/// Indices of model points visible at `pose`: the nearest pixel is covered and
/// the point is not behind the first surface hit along its own ray by more
/// than 1e-4 * diameter.
std::vector<int> visible_points(const SymModel& model, const CameraIntrinsics& k, const Pose& pose);

/// Same, reusing a rasterisation of the model mesh at `pose`.
std::vector<int> visible_points(const SymModel& model, const CameraIntrinsics& k, const Pose& pose,
                                const RenderBuffers& rb);

bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& poly);

/// Convex hull of projected object points, scaled about its centroid.
std::vector<Vec2> projected_hull(const CameraIntrinsics& k, const Pose& pose,
                                 const std::vector<Vec3>& points, double scale);

/// Folded-normal rotation noise: uniform axis, |N(0, sigma)| angle.
Rotation rotation_noise(double sigma, std::mt19937_64& rng);

}  // namespace posedist
