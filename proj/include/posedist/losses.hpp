#pragma once

#include <vector>

#include "posedist/obsgen.hpp"
#include "posedist/symmodel.hpp"

namespace posedist {

struct Losses {
  /// Mean negative log-softmax of the true point, over mask pixels.
  double desc = 0.0;
  /// Mean d_ang(R_gt, frame_image(x) * P_f(h(x))), radians.
  double lf = 0.0;
  std::size_t pixels = 0;
};

/// Pixels without a ground-truth point (mask noise) are skipped.
/// Throws kEmptyMask.
Losses eval_losses(const SymModel& model, const std::vector<Observation>& observations, int threads = 1);

}  // namespace posedist
