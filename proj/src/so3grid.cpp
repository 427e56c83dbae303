#include "posedist/so3grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "posedist/error.hpp"
#include "posedist/parallel.hpp"

namespace posedist {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
constexpr double kHalfPi = 0.5 * kPi;

constexpr int kJrll[12] = {2, 2, 2, 2, 3, 3, 3, 3, 4, 4, 4, 4};
constexpr int kJpll[12] = {1, 3, 5, 7, 0, 2, 4, 6, 1, 3, 5, 7};

struct Zyz {
  double z;      // cos(theta)
  double sth;    // sin(theta)
  double phi;    // [0, 2pi)
  double psi;    // [0, 2pi)
};

double wrap_two_pi(double a) {
  double w = std::fmod(a, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

Zyz decompose(const Mat3& r) {
  Zyz out;
  out.z = std::clamp(r(2, 2), -1.0, 1.0);
  out.sth = std::hypot(r(0, 2), r(1, 2));
  if (out.sth > 1e-12) {
    out.phi = wrap_two_pi(std::atan2(r(1, 2), r(0, 2)));
    out.psi = wrap_two_pi(std::atan2(r(2, 1), -r(2, 0)));
  } else if (out.z > 0.0) {
    // R ~ Rz(phi + psi); put everything into psi.
    out.phi = 0.0;
    out.psi = wrap_two_pi(std::atan2(r(1, 0), r(0, 0)));
  } else {
    out.phi = 0.0;
    out.psi = wrap_two_pi(std::atan2(r(0, 1), -r(0, 0)));
  }
  return out;
}

Mat3 zyz_matrix(double phi, double theta, double psi) {
  return (Eigen::AngleAxisd(phi, Vec3::UnitZ()) * Eigen::AngleAxisd(theta, Vec3::UnitY()) *
          Eigen::AngleAxisd(psi, Vec3::UnitZ()))
      .toRotationMatrix();
}

struct FacePixel {
  int face;
  std::int64_t ix;
  std::int64_t iy;
};

// HEALPix nested-scheme location of a direction given by cos(theta), sin(theta), phi.
FacePixel loc2xyf(std::int64_t nside, double z, double sth, double phi) {
  double za = std::abs(z);
  double tt = phi * (2.0 / kPi);  // in [0, 4)
  if (tt >= 4.0) tt -= 4.0;
  FacePixel fp{};
  if (za <= 2.0 / 3.0) {
    double temp1 = nside * (0.5 + tt);
    double temp2 = nside * (z * 0.75);
    auto jp = static_cast<std::int64_t>(temp1 - temp2);
    auto jm = static_cast<std::int64_t>(temp1 + temp2);
    std::int64_t ifp = jp / nside;
    std::int64_t ifm = jm / nside;
    if (ifp == ifm) {
      fp.face = static_cast<int>(ifp | 4);
    } else if (ifp < ifm) {
      fp.face = static_cast<int>(ifp);
    } else {
      fp.face = static_cast<int>(ifm + 8);
    }
    fp.ix = jm & (nside - 1);
    fp.iy = nside - (jp & (nside - 1)) - 1;
  } else {
    int ntt = std::min(3, static_cast<int>(tt));
    double tp = tt - ntt;
    // 1 - |z| computed from sin(theta) to keep precision near the poles.
    double one_minus_za = sth * sth / (1.0 + za);
    double tmp = nside * std::sqrt(3.0 * one_minus_za);
    auto jp = static_cast<std::int64_t>(tp * tmp);
    auto jm = static_cast<std::int64_t>((1.0 - tp) * tmp);
    jp = std::min(jp, nside - 1);
    jm = std::min(jm, nside - 1);
    if (z >= 0.0) {
      fp.face = ntt;
      fp.ix = nside - jm - 1;
      fp.iy = nside - jp - 1;
    } else {
      fp.face = ntt + 8;
      fp.ix = jp;
      fp.iy = jm;
    }
  }
  return fp;
}

// Centre of a nested HEALPix pixel: returns (z, phi).
std::pair<double, double> xyf2loc(std::int64_t nside, const FacePixel& fp) {
  double fact2 = 4.0 / (12.0 * nside * nside);
  double fact1 = (2.0 * nside) * fact2;
  std::int64_t jr = kJrll[fp.face] * nside - fp.ix - fp.iy - 1;
  std::int64_t nr;
  double z;
  int kshift;
  if (jr < nside) {
    nr = jr;
    z = 1.0 - nr * nr * fact2;
    kshift = 0;
  } else if (jr > 3 * nside) {
    nr = 4 * nside - jr;
    z = nr * nr * fact2 - 1.0;
    kshift = 0;
  } else {
    nr = nside;
    z = (2 * nside - jr) * fact1;
    kshift = static_cast<int>((jr - nside) & 1);
  }
  std::int64_t jp = (kJpll[fp.face] * nr + fp.ix - fp.iy + 1 + kshift) / 2;
  if (jp > 4 * nside) {
    jp -= 4 * nside;
  } else if (jp < 1) {
    jp += 4 * nside;
  }
  double phi = (jp - (kshift + 1) * 0.5) * (kHalfPi / nr);
  return {z, phi};
}

}  // namespace

So3Grid::So3Grid(int level) : level_(level), nside_(std::int64_t{1} << level) {
  if (level < 0) throw Error(ErrorCode::kInvalidArgument, "grid level must be >= 0");
  if (level > kMaxLevel) {
    throw Error(ErrorCode::kLevelTooLarge, "grid level " + std::to_string(level) + " > 8");
  }
}

double So3Grid::spacing() const { return (kPi / 3.0) / static_cast<double>(nside_); }

CellId So3Grid::bin_of(const Rotation& r) const {
  Zyz a = decompose(r.matrix());
  FacePixel fp = loc2xyf(nside_, a.z, a.sth, a.phi);
  std::int64_t npsi = 6 * nside_;
  auto p = static_cast<std::int64_t>(a.psi / kTwoPi * static_cast<double>(npsi));
  p = std::clamp<std::int64_t>(p, 0, npsi - 1);
  std::int64_t base_psi = p >> level_;
  std::int64_t j = p & (nside_ - 1);
  CellId idx = static_cast<CellId>(fp.face * 6 + base_psi) << (3 * level_);
  for (int b = 0; b < level_; ++b) {
    CellId triple = ((fp.ix >> b) & 1) | (((fp.iy >> b) & 1) << 1) | (((j >> b) & 1) << 2);
    idx |= triple << (3 * b);
  }
  return idx;
}

Rotation So3Grid::representative(CellId cell) const {
  if (cell >= cell_count()) throw Error(ErrorCode::kInvalidArgument, "cell index out of range");
  CellId base = cell >> (3 * level_);
  FacePixel fp{static_cast<int>(base / 6), 0, 0};
  std::int64_t base_psi = static_cast<std::int64_t>(base % 6);
  std::int64_t j = 0;
  for (int b = 0; b < level_; ++b) {
    CellId triple = (cell >> (3 * b)) & 7;
    fp.ix |= static_cast<std::int64_t>(triple & 1) << b;
    fp.iy |= static_cast<std::int64_t>((triple >> 1) & 1) << b;
    j |= static_cast<std::int64_t>((triple >> 2) & 1) << b;
  }
  auto [z, phi] = xyf2loc(nside_, fp);
  std::int64_t p = (base_psi << level_) | j;
  double psi = (static_cast<double>(p) + 0.5) * kTwoPi / static_cast<double>(6 * nside_);
  return Rotation::from_matrix(zyz_matrix(phi, std::acos(z), psi));
}

bool So3Grid::adjacent(CellId a, CellId b) const {
  return d_ang(representative(a), representative(b)) <= adjacency_radius();
}

So3Grid build_grid(int k) { return So3Grid(k); }

DensityHistogram::DensityHistogram(So3Grid grid,
                                   std::vector<std::pair<CellId, std::uint64_t>> counts)
    : grid_(grid), counts_(std::move(counts)) {}

std::uint64_t DensityHistogram::count(CellId cell) const {
  auto it = std::lower_bound(counts_.begin(), counts_.end(), cell,
                             [](const auto& e, CellId c) { return e.first < c; });
  return (it != counts_.end() && it->first == cell) ? it->second : 0;
}

std::uint64_t DensityHistogram::total() const {
  std::uint64_t t = 0;
  for (const auto& e : counts_) t += e.second;
  return t;
}

std::uint64_t DensityHistogram::max_count() const {
  std::uint64_t m = 0;
  for (const auto& e : counts_) m = std::max(m, e.second);
  return m;
}

DensityHistogram DensityHistogram::aggregate_to_parent() const {
  if (grid_.level() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "level-0 histogram has no parent level");
  }
  std::vector<std::pair<CellId, std::uint64_t>> out;
  for (const auto& [cell, n] : counts_) {
    CellId p = So3Grid::parent(cell);
    if (!out.empty() && out.back().first == p) {
      out.back().second += n;
    } else {
      out.emplace_back(p, n);
    }
  }
  return DensityHistogram(So3Grid(grid_.level() - 1), std::move(out));
}

DensityHistogram histogram_from_bins(const So3Grid& grid, std::vector<CellId> bins) {
  std::sort(bins.begin(), bins.end());
  std::vector<std::pair<CellId, std::uint64_t>> counts;
  for (CellId b : bins) {
    if (!counts.empty() && counts.back().first == b) {
      ++counts.back().second;
    } else {
      counts.emplace_back(b, 1);
    }
  }
  return DensityHistogram(grid, std::move(counts));
}

DensityHistogram density(const So3Grid& grid, const std::vector<Rotation>& hypotheses,
                         int threads) {
  std::vector<CellId> bins(hypotheses.size());
  parallel_for(hypotheses.size(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) bins[i] = grid.bin_of(hypotheses[i]);
  });
  return histogram_from_bins(grid, std::move(bins));
}

std::vector<int> connected_components(const So3Grid& grid, const std::vector<CellId>& cells) {
  const std::size_t n = cells.size();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  std::vector<Rotation> reps;
  reps.reserve(n);
  for (CellId c : cells) reps.push_back(grid.representative(c));
  const double radius = grid.adjacency_radius();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (d_ang(reps[i], reps[j]) <= radius) {
        int a = find(static_cast<int>(i));
        int b = find(static_cast<int>(j));
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::vector<int> label(n, -1);
  std::vector<int> root_label(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    int r = find(static_cast<int>(i));
    if (root_label[r] < 0) root_label[r] = next++;
    label[i] = root_label[r];
  }
  return label;
}

}  // namespace posedist
