#include "posedist/matcher.hpp"

#include <algorithm>
#include <cmath>

#include "posedist/error.hpp"
#include "posedist/parallel.hpp"

namespace posedist {
namespace {

// Pixels per GEMM block; the N x kBlock similarity slab stays in memory.
constexpr int kBlock = 32;

void select(const double* sims, Eigen::Index n, int pixel, double tau,
            std::vector<Correspondence>& out) {
  double best = *std::max_element(sims, sims + n);
  double cut = tau * best;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (sims[j] >= cut) out.push_back({pixel, static_cast<int>(j), sims[j]});
  }
}

double log_sum_exp(const double* sims, Eigen::Index n, double beta) {
  Eigen::Map<const Eigen::ArrayXd> s(sims, n);
  double m = s.maxCoeff();
  return beta * m + std::log((beta * (s - m)).exp().sum());
}

void run_blocks(const Observation& obs, const SymModel& model, double tau, int threads,
                bool want_matches, std::vector<Correspondence>* matches, Eigen::VectorXd* log_z) {
  const Eigen::Index p = static_cast<Eigen::Index>(obs.mask_count());
  const std::size_t nblocks = static_cast<std::size_t>((p + kBlock - 1) / kBlock);
  std::vector<std::vector<Correspondence>> per_block(want_matches ? nblocks : 0);
  if (log_z) log_z->resize(p);
  const double beta = model.params.beta;
  parallel_for(nblocks, threads, [&](std::size_t b0, std::size_t b1) {
    Eigen::MatrixXd slab;
    for (std::size_t b = b0; b < b1; ++b) {
      Eigen::Index c0 = static_cast<Eigen::Index>(b) * kBlock;
      Eigen::Index w = std::min<Eigen::Index>(kBlock, p - c0);
      slab.noalias() = model.descriptors.transpose() * obs.descriptors.middleCols(c0, w);
      for (Eigen::Index c = 0; c < w; ++c) {
        const double* col = slab.col(c).data();
        if (want_matches) select(col, slab.rows(), static_cast<int>(c0 + c), tau, per_block[b]);
        if (log_z) (*log_z)(c0 + c) = log_sum_exp(col, slab.rows(), beta);
      }
    }
  });
  if (want_matches) {
    std::size_t total = 0;
    for (const auto& v : per_block) total += v.size();
    matches->reserve(total);
    for (auto& v : per_block) {
      matches->insert(matches->end(), v.begin(), v.end());
      std::vector<Correspondence>().swap(v);
    }
  }
}

void check_tau(double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "tau_desc must be in (0, 1]");
}

}  // namespace

std::vector<Correspondence> match_pixel(const Observation& obs, const SymModel& model,
                                        const Eigen::Vector2i& pixel, double tau_desc) {
  check_tau(tau_desc);
  int idx = obs.index_at(pixel.x(), pixel.y());
  if (idx < 0) throw Error(ErrorCode::kPixelOffMask, "pixel is not in the mask");
  Eigen::MatrixXd sims = model.descriptors.transpose() * obs.descriptors.middleCols(idx, 1);
  std::vector<Correspondence> out;
  select(sims.data(), sims.rows(), idx, tau_desc, out);
  return out;
}

std::vector<RotationHypothesis> hypotheses_for_pixel(const Observation& obs, const SymModel& model,
                                                     const std::vector<Correspondence>& matches) {
  std::vector<RotationHypothesis> out;
  out.reserve(matches.size());
  for (const auto& c : matches) {
    out.push_back({compose_frames(obs.frames[c.pixel], model.frames[c.point]), c});
  }
  return out;
}

HypothesisSet all_hypotheses(const Observation& obs, const SymModel& model, double tau_desc,
                             int threads, Eigen::VectorXd* log_partition) {
  check_tau(tau_desc);
  if (obs.mask_count() == 0) throw Error(ErrorCode::kEmptyMask, "observation mask is empty");
  HypothesisSet h;
  run_blocks(obs, model, tau_desc, threads, true, &h.items, log_partition);
  return h;
}

Eigen::VectorXd log_partition(const Observation& obs, const SymModel& model, int threads) {
  if (obs.mask_count() == 0) throw Error(ErrorCode::kEmptyMask, "observation mask is empty");
  Eigen::VectorXd z;
  run_blocks(obs, model, 1.0, threads, false, nullptr, &z);
  return z;
}

Json hypotheses_to_json(const HypothesisSet& h, const Observation& obs, const SymModel& model) {
  Json arr = Json::array();
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto& c = h.items[i];
    Quat q = h.rotation(i, obs, model).quaternion();
    arr.push_back({{"pixel", {obs.pixels[c.pixel].x(), obs.pixels[c.pixel].y()}},
                   {"point", c.point},
                   {"quaternion_wxyz", {q.w(), q.x(), q.y(), q.z()}},
                   {"similarity", c.similarity}});
  }
  return arr;
}

}  // namespace posedist
