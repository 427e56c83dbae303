#pragma once

#include <array>
#include <vector>

#include "posedist/rotkit.hpp"

namespace posedist {

/// All poses mapping the three object points onto the three pixels (up to
/// four). Throws kCollinearPoints, kNoRealSolution.
std::vector<Pose> p3p_solve(const CameraIntrinsics& k, const std::array<Vec2, 3>& pixels,
                            const std::array<Vec3, 3>& points);

/// Reprojection error in pixels (+inf behind the camera).
double reprojection_error(const CameraIntrinsics& k, const Pose& pose, const Vec2& pixel, const Vec3& x);

}  // namespace posedist
