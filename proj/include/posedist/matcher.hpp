#pragma once

#include <vector>

#include <Eigen/Core>

#include "posedist/obsgen.hpp"
#include "posedist/symmodel.hpp"

namespace posedist {

/// x <-> X. `pixel` indexes Observation::pixels.
struct Correspondence {
  int pixel = 0;
  int point = 0;
  /// Raw descriptor dot product.
  double similarity = 0.0;
};

struct RotationHypothesis {
  Rotation rotation;
  Correspondence source;
};

/// H_R(I) stored as correspondences sorted by (pixel, point); rotations are
/// recomputed on demand from the two frame fields.
struct HypothesisSet {
  std::vector<Correspondence> items;

  std::size_t size() const { return items.size(); }
  Rotation rotation(std::size_t i, const Observation& obs, const SymModel& model) const {
    return compose_frames(obs.frames[items[i].pixel], model.frames[items[i].point]);
  }
};

constexpr double kDefaultTauDesc = 0.65;

/// S(I, x): all model points with dot >= tau * best dot. Throws kPixelOffMask.
std::vector<Correspondence> match_pixel(const Observation& obs, const SymModel& model,
                                        const Eigen::Vector2i& pixel, double tau_desc = kDefaultTauDesc);

std::vector<RotationHypothesis> hypotheses_for_pixel(const Observation& obs, const SymModel& model,
                                                     const std::vector<Correspondence>& matches);

/// One pass over all mask pixels producing H_R(I) and, optionally, the
/// per-pixel log partition log sum_X exp(beta * dot) used by sim_desc.
/// Throws kEmptyMask.
HypothesisSet all_hypotheses(const Observation& obs, const SymModel& model,
                             double tau_desc = kDefaultTauDesc, int threads = 1,
                             Eigen::VectorXd* log_partition = nullptr);

/// Per-pixel log partition only.
Eigen::VectorXd log_partition(const Observation& obs, const SymModel& model, int threads = 1);

/// Log-softmax similarity of pixel column `pixel` against point X.
inline double sim_desc(const Observation& obs, const SymModel& model, const Eigen::VectorXd& log_z,
                       int pixel, int point) {
  return model.params.beta * obs.descriptors.col(pixel).dot(model.descriptors.col(point)) - log_z(pixel);
}

Json hypotheses_to_json(const HypothesisSet& h, const Observation& obs, const SymModel& model);

}  // namespace posedist
