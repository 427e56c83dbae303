#include "posedist/losses.hpp"

#include "posedist/error.hpp"
#include "posedist/matcher.hpp"

namespace posedist {

Losses eval_losses(const SymModel& model, const std::vector<Observation>& observations, int threads) {
  Losses out;
  double sum_desc = 0.0, sum_lf = 0.0;
  for (const auto& obs : observations) {
    if (obs.mask_count() == 0) continue;
    Eigen::VectorXd log_z = log_partition(obs, model, threads);
    for (std::size_t j = 0; j < obs.mask_count(); ++j) {
      int h = obs.gt_point[j];
      if (h < 0) continue;
      sum_desc -= sim_desc(obs, model, log_z, static_cast<int>(j), h);
      sum_lf += d_ang(obs.gt_pose.rotation, compose_frames(obs.frames[j], model.frames[h]));
      ++out.pixels;
    }
  }
  if (out.pixels == 0) throw Error(ErrorCode::kEmptyMask, "no mask pixel with a ground-truth point");
  out.desc = sum_desc / static_cast<double>(out.pixels);
  out.lf = sum_lf / static_cast<double>(out.pixels);
  return out;
}

}  // namespace posedist
