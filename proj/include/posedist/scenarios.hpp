#pragma once

#include <string>
#include <vector>

#include "posedist/obsgen.hpp"

namespace posedist {

/// 128 x 128 crop, f = 450 px, principal point at the centre.
CameraIntrinsics default_camera();

/// Ground-truth pose used by the bundled scenarios: object 0.5 m in front of
/// the camera, tilted so that the top cap (or the marked cube corner) faces
/// the camera.
Pose default_pose(const std::string& object);

ScenarioConfig default_scenario(const std::string& object, std::uint64_t seed = 1);

/// Polygon covering the projected top cap (z = +h/2 face) of a prism,
/// enlarged by `scale` about its centroid.
std::vector<Vec2> top_cap_occluder(const TriMesh& mesh, const CameraIntrinsics& k, const Pose& pose,
                                   double scale = 1.15);

/// Noiseless scenarios at uniformly random rotations, 0.5 m away with a
/// small lateral shift, keeping only poses fully inside the default crop.
std::vector<ScenarioConfig> random_noiseless_scenarios(const TriMesh& mesh, int count, std::uint64_t seed);

}  // namespace posedist
