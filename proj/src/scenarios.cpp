#include "posedist/scenarios.hpp"

#include <algorithm>
#include <random>

namespace posedist {

CameraIntrinsics default_camera() {
  CameraIntrinsics k;
  k.fx = k.fy = 450.0;
  k.cx = k.cy = 64.0;
  k.width = k.height = 128;
  return k;
}

Pose default_pose(const std::string& object) {
  Pose p;
  p.translation = Vec3(0.0, 0.0, 0.5);
  if (object == "marked_cube") {
    Quat q = Quat::FromTwoVectors(Vec3(1, 1, 1).normalized(), Vec3(0.25, -0.35, -1.0).normalized());
    p.rotation = Rotation::from_quaternion(q) * Rotation::about(Vec3(1, 1, 1).normalized(), 0.3);
  } else {
    p.rotation = Rotation::about(Vec3::UnitX(), 2.42) * Rotation::about(Vec3::UnitZ(), 0.4);
  }
  return p;
}

ScenarioConfig default_scenario(const std::string& object, std::uint64_t seed) {
  ScenarioConfig c;
  c.camera = default_camera();
  c.gt_pose = default_pose(object);
  c.seed = seed;
  return c;
}

std::vector<Vec2> top_cap_occluder(const TriMesh& mesh, const CameraIntrinsics& k, const Pose& pose,
                                   double scale) {
  double top = -1e300;
  for (const auto& v : mesh.vertices) top = std::max(top, v.z());
  std::vector<Vec3> cap;
  for (const auto& v : mesh.vertices) {
    if (v.z() > top - 1e-12) cap.push_back(v);
  }
  return projected_hull(k, pose, cap, scale);
}

}  // namespace posedist

namespace posedist {

std::vector<ScenarioConfig> random_noiseless_scenarios(const TriMesh& mesh, int count, std::uint64_t seed) {
  std::vector<ScenarioConfig> out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> shift(-0.01, 0.01);
  while (static_cast<int>(out.size()) < count) {
    ScenarioConfig c;
    c.camera = default_camera();
    c.gt_pose.rotation = random_rotation(rng);
    c.gt_pose.translation = Vec3(shift(rng), shift(rng), 0.5);
    c.seed = seed + out.size();
    if (fully_in_frame(mesh, c.camera, c.gt_pose)) out.push_back(c);
  }
  return out;
}

}  // namespace posedist
