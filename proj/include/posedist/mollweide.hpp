#pragma once

#include <string>
#include <vector>

#include "posedist/rotkit.hpp"

namespace posedist {

/// Mollweide coordinates of the direction R*z, x in [-2 sqrt 2, 2 sqrt 2],
/// y in [-sqrt 2, sqrt 2].
Vec2 mollweide_xy(const Rotation& r);

/// In-plane angle psi of the ZYZ decomposition, in [0, 2 pi).
double zyz_psi(const Rotation& r);

struct MollweidePlot {
  std::string title;
  std::vector<Rotation> points;
  /// Marker weights (e.g. scores); empty means equal markers.
  std::vector<double> weights;
  std::vector<Rotation> ground_truth;
  /// Shown as a banner when non-empty.
  std::string warning;
  std::string provenance;
};

/// Byte-stable SVG: filled dots for points (hue = psi, area from the weight
/// normalised over the plot), open circles for ground truth.
std::string mollweide_svg(const MollweidePlot& plot);

}  // namespace posedist
