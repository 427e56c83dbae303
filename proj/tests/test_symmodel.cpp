#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "posedist/error.hpp"
#include "posedist/symmodel.hpp"

using namespace posedist;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Brute-force nearest neighbour distances.
std::vector<double> nn_distances(const std::vector<Vec3>& pts) {
  std::vector<double> out(pts.size(), 1e300);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts.size(); ++j)
      if (i != j) out[i] = std::min(out[i], (pts[i] - pts[j]).norm());
  return out;
}

std::size_t brute_nearest(const std::vector<Vec3>& pts, const Vec3& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if ((pts[i] - p).squaredNorm() < (pts[best] - p).squaredNorm()) best = i;
  return best;
}

const SymModel& model_for(const std::string& name) {
  static std::map<std::string, SymModel> cache;
  auto it = cache.find(name);
  if (it == cache.end()) {
    auto obj = bundled_object(name);
    SymModelParams p;
    p.seed = 7;
    it = cache.emplace(name, build_symmodel(obj.mesh, obj.symmetry, p)).first;
  }
  return it->second;
}

double spacing_fraction_ok(const SymModel& m, std::size_t probes) {
  // Fraction of probed points whose nearest other point is >= 0.5 * ideal.
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> pick(0, m.size() - 1);
  const double ideal = ideal_spacing(m.mesh.area(), m.size());
  std::size_t ok = 0;
  for (std::size_t k = 0; k < probes; ++k) {
    std::size_t i = pick(rng);
    double best = 1e300;
    for (std::size_t j = 0; j < m.size(); ++j)
      if (j != i) best = std::min(best, (m.points[i] - m.points[j]).norm());
    if (best >= 0.5 * ideal) ++ok;
  }
  return static_cast<double>(ok) / probes;
}

}  // namespace

TEST_CASE("bundled meshes are closed and consistently oriented") {
  for (const auto& name : bundled_object_names()) {
    auto obj = bundled_object(name);
    const auto& m = obj.mesh;
    // Divergence theorem: sum of signed tetra volumes equals the enclosed
    // volume, and every directed edge appears once with its reverse.
    double vol = 0.0;
    std::map<std::pair<int, int>, int> edges;
    for (const auto& t : m.triangles) {
      vol += m.vertices[t[0]].dot(m.vertices[t[1]].cross(m.vertices[t[2]])) / 6.0;
      for (int i = 0; i < 3; ++i) edges[{t[i], t[(i + 1) % 3]}]++;
    }
    CHECK(vol > 0.0);
    bool paired = true;
    for (const auto& [e, c] : edges) {
      auto rev = edges.find({e.second, e.first});
      if (c != 1 || rev == edges.end() || rev->second != 1) paired = false;
    }
    if (name != "marked_cube") CHECK(paired);  // two glued boxes share no edges
  }
  auto cyl = bundled_object("cylinder").mesh;
  CHECK(cyl.diameter == doctest::Approx(std::hypot(0.06, 0.08)).epsilon(1e-9));
}

TEST_CASE("sample_surface: sphere spacing statistics") {
  auto sphere = make_icosphere(1.0, 4);
  auto s = sample_surface(sphere, 1000, 11);
  REQUIRE(s.points.size() <= 1000);
  CHECK(s.points.size() >= 950);
  auto nn = nn_distances(s.points);
  double mean = 0.0, var = 0.0;
  for (double d : nn) mean += d;
  mean /= nn.size();
  for (double d : nn) var += (d - mean) * (d - mean);
  double cv = std::sqrt(var / nn.size()) / mean;
  CHECK(cv < 0.3);
  const double ideal = ideal_spacing(sphere.area(), s.points.size());
  std::size_t ok = std::count_if(nn.begin(), nn.end(), [&](double d) { return d >= 0.5 * ideal; });
  CHECK(static_cast<double>(ok) / nn.size() >= 0.99);
}

TEST_CASE("sample_surface: single triangle containment and determinism") {
  TriMesh tri;
  tri.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0.2, 0.9, 0.1)};
  tri.triangles = {{0, 1, 2}};
  tri.finalize();
  auto s = sample_surface(tri, 10, 5);
  REQUIRE(!s.points.empty());
  CHECK(s.points.size() <= 10);
  Vec3 a = tri.vertices[0], b = tri.vertices[1], c = tri.vertices[2];
  Vec3 n = (b - a).cross(c - a);
  for (const auto& p : s.points) {
    double area = n.norm();
    double u = (c - b).cross(p - b).dot(n) / (area * area);
    double v = (a - c).cross(p - c).dot(n) / (area * area);
    double w = 1.0 - u - v;
    CHECK(u >= -1e-12);
    CHECK(v >= -1e-12);
    CHECK(w >= -1e-12);
    CHECK(std::abs(n.normalized().dot(p - a)) < 1e-12);
  }
  auto s2 = sample_surface(tri, 10, 5);
  CHECK(s2.points == s.points);
  auto s3 = sample_surface(tri, 10, 6);
  CHECK(s3.points != s.points);
}

TEST_CASE("sample_surface: degenerate mesh") {
  TriMesh flat;
  flat.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
  flat.triangles = {{0, 1, 2}};
  CHECK_THROWS_AS(flat.finalize(), Error);
}

TEST_CASE("canonical_descriptor: quotient invariance") {
  auto hex = SymmetrySpec::discrete(Vec3::UnitZ(), 6);
  DescriptorField f(hex, 64, 0.002, 1);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.04, 0.04);
  auto s6 = Rotation::about(Vec3::UnitZ(), 2.0 * kPi / 6.0);
  for (int i = 0; i < 100; ++i) {
    Vec3 x(u(rng), u(rng), u(rng));
    auto d = f(x);
    CHECK(std::abs(d.norm() - 1.0) < 1e-12);
    CHECK((f(s6 * x) - d).norm() < 1e-9);
  }
  auto cont = SymmetrySpec::continuous(Vec3(1, 1, 0).normalized());
  DescriptorField g(cont, 64, 0.002, 1);
  for (int i = 0; i < 100; ++i) {
    Vec3 x(u(rng), u(rng), u(rng));
    double theta = 2.0 * kPi * (u(rng) + 0.04) / 0.08;
    CHECK((g(Rotation::about(cont.axis, theta) * x) - g(x)).norm() < 1e-9);
  }
}

TEST_CASE("canonical_descriptor: asymmetric collision study") {
  const auto& m = model_for("marked_cube");
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> pick(0, m.size() - 1);
  const double min_sep = 0.02 * m.diameter();
  int pairs = 0, distinct = 0;
  while (pairs < 100000) {
    std::size_t i = pick(rng), j = pick(rng);
    if ((m.points[i] - m.points[j]).norm() <= min_sep) continue;
    ++pairs;
    if (m.descriptors.col(i).dot(m.descriptors.col(j)) < 0.99) ++distinct;
  }
  CHECK(static_cast<double>(distinct) / pairs >= 0.99);
  CHECK(m.size() <= 50000);
  CHECK(m.size() >= 45000);
}

TEST_CASE("canonical_local_frame") {
  auto hex = SymmetrySpec::discrete(Vec3::UnitZ(), 6);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto s6 = Rotation::about(hex.axis, 2.0 * kPi / 6.0);
  for (int i = 0; i < 200; ++i) {
    Vec3 x(u(rng), u(rng), u(rng));
    auto f = canonical_local_frame(hex, x, 2.0);
    CHECK(std::abs((f * x).y()) < 1e-12);
    auto f2 = canonical_local_frame(hex, s6 * x, 2.0);
    CHECK(d_ang(f2.inverse() * f, s6) < 1e-9);
  }
  auto cont = SymmetrySpec::continuous(Vec3(0.3, -0.2, 0.9).normalized());
  Vec3 x(0.4, 0.1, -0.3);
  auto ref = canonical_local_frame(cont, x, 1.0);
  for (int i = 0; i < 360; ++i) {
    auto s = Rotation::about(cont.axis, 2.0 * kPi * i / 360.0);
    CHECK(d_ang(canonical_local_frame(cont, s * x, 1.0) * s, ref) < 1e-9);
  }
  CHECK(d_ang(canonical_local_frame(SymmetrySpec::asymmetric(), x, 1.0), Rotation()) == 0.0);
  try {
    canonical_local_frame(hex, Vec3(0, 0, 0.3), 1.0);
    FAIL("expected OnAxisPoint");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kOnAxisPoint);
  }
}

TEST_CASE("SymmetrySpec validation") {
  CHECK_THROWS_AS(SymmetrySpec::discrete(Vec3::UnitZ(), 0).validate(), Error);
  CHECK_THROWS_AS(SymmetrySpec::discrete(Vec3::UnitZ(), 1).validate(), Error);
  CHECK_THROWS_AS(SymmetrySpec::continuous(Vec3(0, 0, 2)).validate(), Error);
  CHECK(SymmetrySpec::discrete(Vec3::UnitZ(), 6).group_elements().size() == 6);
  CHECK(SymmetrySpec::continuous(Vec3::UnitZ()).group_elements(kPi / 180.0).size() == 360);
}

TEST_CASE("build_symmodel: unit descriptors, even spacing, point budget") {
  for (const auto& name : bundled_object_names()) {
    const auto& m = model_for(name);
    INFO(name);
    CHECK(m.size() <= 50000);
    CHECK(m.size() >= 40000);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < m.descriptors.cols(); ++i)
      worst = std::max(worst, std::abs(m.descriptors.col(i).norm() - 1.0));
    CHECK(worst < 1e-9);
    CHECK(spacing_fraction_ok(m, 300) >= 0.99);
    // Points lie on the surface (ring points sit on the faceted cylinder to
    // within its chord error).
    TriangleLocator loc(m.mesh);
    double off = 0.0;
    for (std::size_t i = 0; i < m.size(); i += 97) {
      int f = loc.nearest(m.points[i]);
      const auto& t = m.mesh.triangles[f];
      Vec3 q = closest_point_on_triangle(m.points[i], m.mesh.vertices[t[0]], m.mesh.vertices[t[1]],
                                         m.mesh.vertices[t[2]]);
      off = std::max(off, (q - m.points[i]).norm());
    }
    CHECK(off < 1e-4 * m.diameter());
  }
}

TEST_CASE("build_symmodel: nearest-point index agrees with brute force") {
  const auto& m = model_for("hex_prism");
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  for (int i = 0; i < 200; ++i) {
    Vec3 p(u(rng), u(rng), u(rng));
    CHECK(static_cast<std::size_t>(m.nearest(p)) == brute_nearest(m.points, p));
  }
}

TEST_CASE("build_symmodel: cylinder symmetry consistency") {
  const auto& m = model_for("cylinder");
  const double tol = 2.0 * m.spacing / m.diameter();
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi);
  std::size_t checked = 0, desc_bad = 0, frame_bad = 0;
  double near_axis_worst = 0.0;
  for (std::size_t i = 0; i < m.size(); i += 7) {
    auto s = Rotation::about(m.symmetry.axis, ang(rng));
    int j = m.nearest(s * m.points[i]);
    if ((m.descriptors.col(j) - m.descriptors.col(i)).norm() > 1e-6) ++desc_bad;
    double err = d_ang(m.frames[j], m.frames[i] * s.inverse());
    double rho = m.points[i].head<2>().norm();
    if (rho >= m.diameter() / 4.0) {
      ++checked;
      if (err > tol) ++frame_bad;
    } else {
      // Near the axis the ring step bounds the error instead.
      int ring = std::max(1, static_cast<int>(std::lround(2.0 * kPi * rho / m.spacing)));
      near_axis_worst = std::max(near_axis_worst, err / (kPi / ring));
    }
  }
  CHECK(checked > 1000);
  CHECK(desc_bad == 0);
  CHECK(frame_bad == 0);
  CHECK(near_axis_worst <= 1.3);
}

TEST_CASE("build_symmodel: hexagonal prism group recovery") {
  const auto& m = model_for("hex_prism");
  const double tol = 2.0 * m.spacing / m.diameter();
  std::vector<int> invariant;
  for (int n = 2; n <= 12; ++n) {
    auto s = Rotation::about(m.symmetry.axis, 2.0 * kPi / n);
    bool ok = true;
    for (std::size_t i = 0; i < m.size() && ok; i += 13) {
      int j = m.nearest(s * m.points[i]);
      if ((m.descriptors.col(j) - m.descriptors.col(i)).norm() > 1e-6) ok = false;
      if (d_ang(m.frames[j], m.frames[i] * s.inverse()) > tol) ok = false;
    }
    if (ok) invariant.push_back(n);
  }
  CHECK(invariant == std::vector<int>{2, 3, 6});
  // Rotations by multiples of 60 degrees are the only invariant ones on a
  // fine sweep.
  int count = 0;
  for (int deg = 0; deg < 360; ++deg) {
    auto s = Rotation::about(m.symmetry.axis, deg * kPi / 180.0);
    bool ok = true;
    for (std::size_t i = 0; i < m.size() && ok; i += 29) {
      int j = m.nearest(s * m.points[i]);
      if ((m.descriptors.col(j) - m.descriptors.col(i)).norm() > 1e-6) ok = false;
    }
    if (ok) {
      ++count;
      CHECK(deg % 60 == 0);
    }
  }
  CHECK(count == 6);
}

TEST_CASE("build_symmodel: determinism and marker region") {
  auto obj = bundled_object("marked_prism");
  SymModelParams p;
  p.max_points = 5000;
  p.seed = 3;
  auto a = build_symmodel(obj.mesh, obj.symmetry, p);
  auto b = build_symmodel(obj.mesh, obj.symmetry, p);
  CHECK(a.points == b.points);
  CHECK(a.descriptors == b.descriptors);
  // Marker points break the six-fold invariance.
  auto s6 = Rotation::about(obj.symmetry.axis, 2.0 * kPi / 6.0);
  int marker = 0, broken = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!obj.symmetry.in_marker(a.points[i])) continue;
    ++marker;
    int j = a.nearest(s6 * a.points[i]);
    if ((a.descriptors.col(j) - a.descriptors.col(i)).norm() > 1e-3) ++broken;
  }
  CHECK(marker > 10);
  CHECK(broken == marker);
}
