#include "posedist/symmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "posedist/error.hpp"

namespace posedist {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
// Meridian half-plane used to extract the profile of surfaces of revolution.
// Any angle works; a generic one avoids hitting mesh vertices.
constexpr double kProfileAngle = 0.5123;

double wrap_two_pi(double a) {
  double w = std::fmod(a, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  return w;
}

struct Cylindrical {
  double rho;
  double height;
  double theta;
};

Cylindrical cylindrical(const AxisBasis& b, const Vec3& x) {
  double u = b.e1.dot(x), v = b.e2.dot(x);
  return {std::hypot(u, v), b.axis.dot(x), std::atan2(v, u)};
}

// Dense uniform grid with per-cell linked lists, for Poisson-disk rejection.
class DiskGrid {
 public:
  DiskGrid(const Vec3& lo, const Vec3& hi, double cell) : lo_(lo), cell_(cell) {
    for (int i = 0; i < 3; ++i) {
      dims_[i] = std::max(1, static_cast<int>(std::ceil((hi[i] - lo[i]) / cell)) + 1);
    }
    head_.assign(static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2], -1);
  }

  bool free(const Vec3& p, double r2) const {
    auto c = coords(p);
    for (int z = std::max(0, c[2] - 1); z <= std::min(dims_[2] - 1, c[2] + 1); ++z)
      for (int y = std::max(0, c[1] - 1); y <= std::min(dims_[1] - 1, c[1] + 1); ++y)
        for (int x = std::max(0, c[0] - 1); x <= std::min(dims_[0] - 1, c[0] + 1); ++x)
          for (int i = head_[flat(x, y, z)]; i >= 0; i = next_[i]) {
            if ((pts_[i] - p).squaredNorm() < r2) return false;
          }
    return true;
  }

  void insert(const Vec3& p) {
    auto c = coords(p);
    std::size_t f = flat(c[0], c[1], c[2]);
    pts_.push_back(p);
    next_.push_back(head_[f]);
    head_[f] = static_cast<int>(pts_.size()) - 1;
  }

 private:
  std::array<int, 3> coords(const Vec3& p) const {
    std::array<int, 3> c{};
    for (int i = 0; i < 3; ++i) {
      c[i] = std::clamp(static_cast<int>(std::floor((p[i] - lo_[i]) / cell_)), 0, dims_[i] - 1);
    }
    return c;
  }
  std::size_t flat(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * dims_[1] + y) * dims_[0] + x;
  }

  Vec3 lo_;
  double cell_;
  std::array<int, 3> dims_{};
  std::vector<int> head_;
  std::vector<int> next_;
  std::vector<Vec3> pts_;
};

std::vector<Vec3> area_candidates(const TriMesh& mesh, std::size_t count, std::mt19937_64& rng) {
  std::vector<double> cum(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
    total += mesh.triangle_area(static_cast<int>(f));
    cum[f] = total;
  }
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<Vec3> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    double a = u01(rng) * total;
    std::size_t f = std::min<std::size_t>(
        std::upper_bound(cum.begin(), cum.end(), a) - cum.begin(), cum.size() - 1);
    const auto& t = mesh.triangles[f];
    double s = std::sqrt(u01(rng)), w = u01(rng);
    out.push_back((1.0 - s) * mesh.vertices[t[0]] + s * (1.0 - w) * mesh.vertices[t[1]] +
                  s * w * mesh.vertices[t[2]]);
  }
  return out;
}

// Greedy dart throwing over a fixed candidate list. Every accepted point is
// inserted together with its images so the replicated set stays separated.
std::vector<Vec3> poisson_disk(const std::vector<Vec3>& cands, double r,
                               const std::vector<Mat3>& images, const Vec3& lo, const Vec3& hi,
                               std::size_t stop_after) {
  DiskGrid grid(lo, hi, r);
  std::vector<Vec3> out;
  const double r2 = r * r;
  for (const auto& c : cands) {
    if (!grid.free(c, r2)) continue;
    bool ok = true;
    for (std::size_t g = 1; g < images.size() && ok; ++g) {
      // A point too close to its own image would collide after replication.
      if ((images[g] * c - c).squaredNorm() < r2) ok = false;
    }
    if (!ok) continue;
    out.push_back(c);
    for (const auto& g : images) grid.insert(g * c);
    if (out.size() > stop_after) break;
  }
  return out;
}

std::vector<Vec3> blue_noise(const std::vector<Vec3>& cands, std::size_t target, double area,
                             const std::vector<Mat3>& images, const Vec3& lo, const Vec3& hi) {
  const double n_total = static_cast<double>(target * images.size());
  double r_hi = 1.5 * 0.835 * std::sqrt(area / n_total);
  double r_lo = 0.3 * r_hi;
  std::vector<Vec3> best = poisson_disk(cands, r_hi, images, lo, hi, target);
  while (best.size() > target) {
    r_hi *= 1.5;
    best = poisson_disk(cands, r_hi, images, lo, hi, target);
  }
  for (int it = 0; it < 16; ++it) {
    double r = 0.5 * (r_lo + r_hi);
    auto pts = poisson_disk(cands, r, images, lo, hi, target);
    if (pts.size() > target) {
      r_lo = r;
    } else {
      r_hi = r;
      best = std::move(pts);
    }
  }
  return best;
}

struct Segment2 {
  Eigen::Vector2d a;
  Eigen::Vector2d b;
};

// Cross-section of the mesh with the half-plane at kProfileAngle, in
// (rho, height) coordinates, chained into polylines.
std::vector<std::vector<Eigen::Vector2d>> meridian_profile(const TriMesh& mesh,
                                                           const AxisBasis& basis) {
  const Vec3 dir = std::cos(kProfileAngle) * basis.e1 + std::sin(kProfileAngle) * basis.e2;
  const Vec3 normal = basis.axis.cross(dir);
  const double eps = 1e-12 * mesh.diameter;
  std::vector<Segment2> segs;
  for (const auto& t : mesh.triangles) {
    std::array<double, 3> d{};
    for (int i = 0; i < 3; ++i) d[i] = normal.dot(mesh.vertices[t[i]]);
    std::vector<Vec3> hits;
    for (int i = 0; i < 3; ++i) {
      if (std::abs(d[i]) <= eps) hits.push_back(mesh.vertices[t[i]]);
    }
    for (int i = 0; i < 3; ++i) {
      int j = (i + 1) % 3;
      if (std::abs(d[i]) > eps && std::abs(d[j]) > eps && (d[i] < 0.0) != (d[j] < 0.0)) {
        double s = d[i] / (d[i] - d[j]);
        hits.push_back(mesh.vertices[t[i]] + s * (mesh.vertices[t[j]] - mesh.vertices[t[i]]));
      }
    }
    if (hits.size() != 2) continue;
    Eigen::Vector2d a(dir.dot(hits[0]), basis.axis.dot(hits[0]));
    Eigen::Vector2d b(dir.dot(hits[1]), basis.axis.dot(hits[1]));
    if ((a - b).norm() <= eps) continue;
    // Keep the rho >= 0 half.
    if (a.x() < -eps && b.x() < -eps) continue;
    if (a.x() < 0.0 || b.x() < 0.0) {
      Eigen::Vector2d z = a + (a.x() / (a.x() - b.x())) * (b - a);
      z.x() = 0.0;
      if (a.x() < 0.0) a = z; else b = z;
    }
    if ((a - b).norm() <= eps) continue;
    segs.push_back({a, b});
  }
  if (segs.empty()) throw Error(ErrorCode::kDegenerateMesh, "mesh does not cross its symmetry axis plane");

  // Chain segments through shared endpoints.
  const double snap = 1e-9 * mesh.diameter;
  auto key = [snap](const Eigen::Vector2d& p) {
    return std::make_pair(std::llround(p.x() / snap), std::llround(p.y() / snap));
  };
  std::map<std::pair<long long, long long>, std::vector<int>> ends;
  for (int i = 0; i < static_cast<int>(segs.size()); ++i) {
    ends[key(segs[i].a)].push_back(i);
    ends[key(segs[i].b)].push_back(i);
  }
  std::vector<bool> used(segs.size(), false);
  auto walk = [&](int first, bool forward) {
    std::vector<Eigen::Vector2d> line;
    Eigen::Vector2d cur = forward ? segs[first].a : segs[first].b;
    line.push_back(cur);
    int s = first;
    while (s >= 0) {
      used[s] = true;
      Eigen::Vector2d next = (key(segs[s].a) == key(cur)) ? segs[s].b : segs[s].a;
      line.push_back(next);
      cur = next;
      s = -1;
      for (int cand : ends[key(cur)]) {
        if (!used[cand]) {
          s = cand;
          break;
        }
      }
    }
    return line;
  };
  std::vector<std::vector<Eigen::Vector2d>> lines;
  // Open chains first, starting at endpoints of degree one.
  for (int i = 0; i < static_cast<int>(segs.size()); ++i) {
    if (used[i]) continue;
    if (ends[key(segs[i].a)].size() == 1) lines.push_back(walk(i, true));
    else if (ends[key(segs[i].b)].size() == 1) lines.push_back(walk(i, false));
  }
  for (int i = 0; i < static_cast<int>(segs.size()); ++i) {
    if (!used[i]) lines.push_back(walk(i, true));
  }
  return lines;
}

std::vector<Eigen::Vector2d> profile_points(const std::vector<std::vector<Eigen::Vector2d>>& lines,
                                            double r) {
  std::vector<Eigen::Vector2d> out;
  for (const auto& line : lines) {
    std::vector<double> cum(line.size(), 0.0);
    for (std::size_t i = 1; i < line.size(); ++i) cum[i] = cum[i - 1] + (line[i] - line[i - 1]).norm();
    double len = cum.back();
    bool closed = (line.front() - line.back()).norm() < 1e-12 * std::max(1.0, len);
    int n = std::max(1, static_cast<int>(std::lround(len / r)));
    double step = len / n;
    std::size_t seg = 1;
    for (int i = 0; i < n; ++i) {
      double s = closed ? i * step : (i + 0.5) * step;
      while (seg + 1 < line.size() && cum[seg] < s) ++seg;
      double span = cum[seg] - cum[seg - 1];
      double w = span > 0.0 ? (s - cum[seg - 1]) / span : 0.0;
      out.push_back(line[seg - 1] + w * (line[seg] - line[seg - 1]));
    }
  }
  return out;
}

int ring_size(double rho, double r) {
  return std::max(1, static_cast<int>(std::lround(kTwoPi * rho / r)));
}

std::size_t ring_count(const std::vector<Eigen::Vector2d>& prof, double r, double min_rho) {
  std::size_t n = 0;
  for (const auto& p : prof) {
    if (p.x() >= min_rho) n += ring_size(p.x(), r);
  }
  return n;
}

std::vector<Vec3> sample_rings(const TriMesh& mesh, const SymmetrySpec& sym, std::size_t target,
                               std::mt19937_64& rng) {
  AxisBasis basis(sym.axis);
  auto lines = meridian_profile(mesh, basis);
  const double min_rho = 1e-6 * mesh.diameter;
  auto count = [&](double r) { return ring_count(profile_points(lines, r), r, min_rho); };
  double r_lo = 0.2 * std::sqrt(mesh.area() / static_cast<double>(target));
  double r_hi = 5.0 * r_lo;
  while (count(r_hi) > target) r_hi *= 2.0;
  while (count(r_lo) <= target && r_lo > 1e-9 * mesh.diameter) r_lo *= 0.5;
  for (int it = 0; it < 40; ++it) {
    double r = 0.5 * (r_lo + r_hi);
    if (count(r) > target) r_lo = r; else r_hi = r;
  }
  const double r = r_hi;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<Vec3> out;
  for (const auto& p : profile_points(lines, r)) {
    if (p.x() < min_rho) continue;
    int m = ring_size(p.x(), r);
    double offset = u01(rng) * kTwoPi / m;
    for (int j = 0; j < m; ++j) {
      double phi = offset + kTwoPi * j / m;
      out.push_back(p.x() * (std::cos(phi) * basis.e1 + std::sin(phi) * basis.e2) + p.y() * basis.axis);
    }
  }
  return out;
}

Eigen::VectorXd rff(const Eigen::MatrixXd& omega, const Eigen::VectorXd& phase,
                    const Eigen::VectorXd& q) {
  Eigen::VectorXd d = (omega * q + phase).array().cos().matrix();
  double n = d.norm();
  if (n > 0.0) d /= n;
  return d;
}

}  // namespace

std::string to_string(SymmetryKind kind) {
  switch (kind) {
    case SymmetryKind::kAsymmetric: return "asymmetric";
    case SymmetryKind::kDiscrete: return "discrete";
    case SymmetryKind::kContinuous: return "continuous";
  }
  return "asymmetric";
}

SymmetryKind symmetry_kind_from_string(const std::string& s) {
  if (s == "asymmetric") return SymmetryKind::kAsymmetric;
  if (s == "discrete") return SymmetryKind::kDiscrete;
  if (s == "continuous") return SymmetryKind::kContinuous;
  throw Error(ErrorCode::kInvalidArgument, "unknown symmetry kind '" + s + "'");
}

SymmetrySpec SymmetrySpec::asymmetric() { return {}; }

SymmetrySpec SymmetrySpec::discrete(const Vec3& axis, int n) {
  SymmetrySpec s;
  s.kind = SymmetryKind::kDiscrete;
  s.axis = axis;
  s.order = n;
  return s;
}

SymmetrySpec SymmetrySpec::continuous(const Vec3& axis) {
  SymmetrySpec s;
  s.kind = SymmetryKind::kContinuous;
  s.axis = axis;
  s.order = 0;
  return s;
}

void SymmetrySpec::validate() const {
  if (!axis.allFinite() || std::abs(axis.norm() - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "symmetry axis must be unit-norm");
  }
  if (kind == SymmetryKind::kDiscrete && order < 2) {
    throw Error(ErrorCode::kInvalidArgument, "discrete symmetry needs fold count n >= 2");
  }
  for (const auto& m : markers) {
    if (!m.center.allFinite() || !(m.radius > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "marker radius must be positive");
    }
  }
}

std::vector<Rotation> SymmetrySpec::group_elements(double step) const {
  switch (kind) {
    case SymmetryKind::kAsymmetric:
      return {Rotation()};
    case SymmetryKind::kDiscrete: {
      std::vector<Rotation> out;
      for (int i = 0; i < order; ++i) out.push_back(Rotation::about(axis, kTwoPi * i / order));
      return out;
    }
    case SymmetryKind::kContinuous: {
      if (!(step > 0.0)) throw Error(ErrorCode::kInvalidArgument, "continuous orbit needs a positive step");
      int n = static_cast<int>(std::ceil(kTwoPi / step - 1e-9));
      std::vector<Rotation> out;
      for (int i = 0; i < n; ++i) out.push_back(Rotation::about(axis, i * step));
      return out;
    }
  }
  return {Rotation()};
}

bool SymmetrySpec::in_marker(const Vec3& x) const {
  for (const auto& m : markers) {
    if ((x - m.center).norm() <= m.radius) return true;
  }
  return false;
}

DescriptorField::DescriptorField(const SymmetrySpec& symmetry, int dim, double bandwidth,
                                 std::uint64_t seed)
    : symmetry_(symmetry), dim_(dim), bandwidth_(bandwidth), seed_(seed) {
  if (dim < 2) throw Error(ErrorCode::kInvalidArgument, "descriptor dimension must be >= 2");
  if (!(bandwidth > 0.0)) throw Error(ErrorCode::kInvalidArgument, "bandwidth must be positive");
  int qdim = symmetry.kind == SymmetryKind::kAsymmetric ? 3
             : symmetry.kind == SymmetryKind::kDiscrete ? 4
                                                         : 2;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> gauss(0.0, 1.0 / bandwidth);
  std::uniform_real_distribution<double> uphase(0.0, kTwoPi);
  omega_.resize(dim, qdim);
  phase_.resize(dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < qdim; ++j) omega_(i, j) = gauss(rng);
    phase_(i) = uphase(rng);
  }
  marker_omega_.resize(dim, 3);
  marker_phase_.resize(dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < 3; ++j) marker_omega_(i, j) = gauss(rng);
    marker_phase_(i) = uphase(rng);
  }
}

void DescriptorField::set_features(Eigen::MatrixXd omega, Eigen::VectorXd phase,
                                   Eigen::MatrixXd marker_omega, Eigen::VectorXd marker_phase) {
  omega_ = std::move(omega);
  phase_ = std::move(phase);
  marker_omega_ = std::move(marker_omega);
  marker_phase_ = std::move(marker_phase);
  dim_ = static_cast<int>(omega_.rows());
}

Eigen::VectorXd DescriptorField::quotient(const Vec3& x) const {
  if (symmetry_.kind == SymmetryKind::kAsymmetric) return x;
  AxisBasis b(symmetry_.axis);
  Cylindrical c = cylindrical(b, x);
  if (symmetry_.kind == SymmetryKind::kContinuous) return Eigen::Vector2d(c.rho, c.height);
  const double n = symmetry_.order;
  Eigen::Vector4d q(c.rho, c.height, c.rho / n * std::cos(n * c.theta),
                    c.rho / n * std::sin(n * c.theta));
  return q;
}

Eigen::VectorXd DescriptorField::operator()(const Vec3& x) const {
  if (symmetry_.in_marker(x)) return rff(marker_omega_, marker_phase_, x);
  return rff(omega_, phase_, quotient(x));
}

Eigen::VectorXd canonical_descriptor(const DescriptorField& field, const Vec3& x) { return field(x); }

Rotation canonical_local_frame(const SymmetrySpec& symmetry, const Vec3& x, double diameter) {
  if (!symmetry.axial()) return Rotation();
  const Vec3& a = symmetry.axis;
  Vec3 perp = x - a.dot(x) * a;
  double rho = perp.norm();
  if (rho < 1e-6 * diameter) {
    throw Error(ErrorCode::kOnAxisPoint, "local frame undefined on the symmetry axis");
  }
  Vec3 xl = perp / rho;
  Vec3 yl = a.cross(xl);
  Mat3 m;
  m.row(0) = xl.transpose();
  m.row(1) = yl.transpose();
  m.row(2) = a.transpose();
  return Rotation::from_matrix(m);
}

double ideal_spacing(double area, std::size_t n) {
  return std::sqrt(2.0 * area / (std::sqrt(3.0) * static_cast<double>(std::max<std::size_t>(n, 1))));
}

SurfaceSample sample_surface(const TriMesh& mesh, std::size_t max_points, std::uint64_t seed,
                             const SymmetrySpec& symmetry) {
  const double area = mesh.area();
  if (!(area > 0.0)) throw Error(ErrorCode::kDegenerateMesh, "mesh has zero area");
  if (max_points == 0) throw Error(ErrorCode::kInvalidArgument, "max_points must be positive");
  symmetry.validate();
  std::mt19937_64 rng(seed);
  SurfaceSample out;

  if (symmetry.kind == SymmetryKind::kContinuous) {
    out.points = sample_rings(mesh, symmetry, max_points, rng);
  } else {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
    Vec3 hi = -lo;
    for (const auto& v : mesh.vertices) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    std::vector<Mat3> images{Mat3::Identity()};
    std::size_t target = max_points;
    auto cands = area_candidates(mesh, 8 * max_points, rng);
    if (symmetry.kind == SymmetryKind::kDiscrete) {
      // The replicated set is only symmetric if the bounding box is too.
      double ext = std::max(lo.cwiseAbs().maxCoeff(), hi.cwiseAbs().maxCoeff());
      lo = Vec3::Constant(-ext);
      hi = Vec3::Constant(ext);
      const int n = symmetry.order;
      for (int i = 1; i < n; ++i) images.push_back(Rotation::about(symmetry.axis, kTwoPi * i / n).matrix());
      AxisBasis basis(symmetry.axis);
      const double wedge = kTwoPi / n, min_rho = 1e-6 * mesh.diameter;
      std::vector<Vec3> kept;
      kept.reserve(cands.size() / n + 16);
      for (const auto& c : cands) {
        Cylindrical cy = cylindrical(basis, c);
        if (cy.rho >= min_rho && wrap_two_pi(cy.theta) < wedge) kept.push_back(c);
      }
      cands = std::move(kept);
      target = std::max<std::size_t>(1, max_points / n);
    }
    auto base = blue_noise(cands, target, area, images, lo, hi);
    out.points.reserve(base.size() * images.size());
    for (const auto& g : images) {
      for (const auto& p : base) out.points.push_back(g * p);
    }
  }
  out.spacing = ideal_spacing(area, out.points.size());
  return out;
}

PointIndex::PointIndex(std::vector<Vec3> pts, double cell) : points_(std::move(pts)) {
  const std::vector<Vec3>* points = &points_;
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
  Vec3 hi = -lo;
  for (const auto& p : *points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  if (points->empty()) lo = hi = Vec3::Zero();
  double extent = (hi - lo).maxCoeff();
  cell_ = std::max({cell, extent / 256.0, 1e-12});
  origin_ = lo;
  for (int i = 0; i < 3; ++i) {
    dims_[i] = std::max(1, static_cast<int>(std::floor((hi[i] - lo[i]) / cell_)) + 1);
  }
  std::size_t ncell = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
  std::vector<std::size_t> which(points->size());
  start_.assign(ncell + 1, 0);
  for (std::size_t i = 0; i < points->size(); ++i) {
    const Vec3& p = (*points)[i];
    std::array<int, 3> c{};
    for (int k = 0; k < 3; ++k) {
      c[k] = std::clamp(static_cast<int>(std::floor((p[k] - origin_[k]) / cell_)), 0, dims_[k] - 1);
    }
    which[i] = flat(c[0], c[1], c[2]);
    ++start_[which[i] + 1];
  }
  for (std::size_t i = 0; i < ncell; ++i) start_[i + 1] += start_[i];
  items_.resize(points->size());
  std::vector<int> fill(start_.begin(), start_.end() - 1);
  for (std::size_t i = 0; i < points->size(); ++i) items_[fill[which[i]]++] = static_cast<int>(i);
}

std::size_t PointIndex::flat(int x, int y, int z) const {
  return (static_cast<std::size_t>(z) * dims_[1] + y) * dims_[0] + x;
}

int PointIndex::nearest(const Vec3& p) const {
  if (points_.empty()) return -1;
  std::array<int, 3> c{};
  for (int k = 0; k < 3; ++k) {
    c[k] = std::clamp(static_cast<int>(std::floor((p[k] - origin_[k]) / cell_)), 0, dims_[k] - 1);
  }
  // Distance from p to the outside of the clamped block, for the stop test.
  Vec3 outside = Vec3::Zero();
  for (int k = 0; k < 3; ++k) {
    double lo = origin_[k], hi = origin_[k] + dims_[k] * cell_;
    outside[k] = std::max({lo - p[k], p[k] - hi, 0.0});
  }
  int best = -1;
  double best_d2 = std::numeric_limits<double>::max();
  const int max_ring = std::max({dims_[0], dims_[1], dims_[2]});
  for (int ring = 0; ring <= max_ring; ++ring) {
    for (int z = c[2] - ring; z <= c[2] + ring; ++z) {
      if (z < 0 || z >= dims_[2]) continue;
      for (int y = c[1] - ring; y <= c[1] + ring; ++y) {
        if (y < 0 || y >= dims_[1]) continue;
        bool yz_edge = std::abs(z - c[2]) == ring || std::abs(y - c[1]) == ring;
        for (int x = c[0] - ring; x <= c[0] + ring; ++x) {
          if (x < 0 || x >= dims_[0]) continue;
          if (!yz_edge && std::abs(x - c[0]) != ring) continue;
          std::size_t f = flat(x, y, z);
          for (int i = start_[f]; i < start_[f + 1]; ++i) {
            int idx = items_[i];
            double d2 = (points_[idx] - p).squaredNorm();
            if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
              best_d2 = d2;
              best = idx;
            }
          }
        }
      }
    }
    double reach = ring * cell_ - outside.norm();
    if (best >= 0 && reach > 0.0 && std::sqrt(best_d2) <= reach) break;
  }
  return best;
}

void SymModel::rebuild_index() { index_ = PointIndex(points, spacing); }

SymModel build_symmodel(const TriMesh& mesh, const SymmetrySpec& symmetry,
                        const SymModelParams& params) {
  symmetry.validate();
  if (params.max_points == 0 || params.max_points > 50000) {
    throw Error(ErrorCode::kInvalidArgument, "max_points must be in [1, 50000]");
  }
  if (!(params.beta > 0.0) || !(params.bandwidth_factor > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "beta and bandwidth factor must be positive");
  }
  SymModel model;
  model.mesh = mesh;
  model.mesh_hash = mesh_hash(mesh);
  model.symmetry = symmetry;
  model.params = params;
  SurfaceSample sample = sample_surface(mesh, params.max_points, params.seed, symmetry);
  model.spacing = sample.spacing;
  model.points = std::move(sample.points);
  model.field = DescriptorField(symmetry, params.descriptor_dim,
                                params.bandwidth_factor * model.spacing, params.seed);
  const std::size_t n = model.points.size();
  model.descriptors.resize(params.descriptor_dim, static_cast<Eigen::Index>(n));
  model.frames.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    model.descriptors.col(static_cast<Eigen::Index>(i)) = model.field(model.points[i]);
    model.frames[i] = canonical_local_frame(symmetry, model.points[i], mesh.diameter);
  }
  model.rebuild_index();
  return model;
}

std::vector<std::string> bundled_object_names() {
  return {"cylinder", "hex_prism", "marked_cube", "marked_prism"};
}

BundledObject bundled_object(const std::string& name) {
  if (name == "cylinder") {
    return {make_cylinder(0.03, 0.08, 256), SymmetrySpec::continuous(Vec3::UnitZ())};
  }
  if (name == "hex_prism") {
    return {make_hex_prism(0.04, 0.06), SymmetrySpec::discrete(Vec3::UnitZ(), 6)};
  }
  if (name == "marked_cube") {
    return {make_cube_with_corner_marker(0.06, 0.012), SymmetrySpec::asymmetric()};
  }
  if (name == "marked_prism") {
    BundledObject obj{make_hex_prism(0.04, 0.06), SymmetrySpec::discrete(Vec3::UnitZ(), 6)};
    const double a = 0.3, rho = 0.022;
    obj.symmetry.markers.push_back({Vec3(rho * std::cos(a), rho * std::sin(a), 0.03), 0.012});
    return obj;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown bundled object '" + name + "'");
}

}  // namespace posedist
