#include "posedist/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "posedist/error.hpp"

namespace posedist {
namespace {

constexpr double kPi = 3.14159265358979323846;

void add_quad(TriMesh& m, int a, int b, int c, int d) {
  m.triangles.push_back({a, b, c});
  m.triangles.push_back({a, c, d});
}

void add_box(TriMesh& m, const Vec3& lo, const Vec3& hi) {
  int base = static_cast<int>(m.vertices.size());
  for (int i = 0; i < 8; ++i) {
    m.vertices.emplace_back((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(),
                            (i & 4) ? hi.z() : lo.z());
  }
  auto v = [base](int i) { return base + i; };
  add_quad(m, v(0), v(2), v(3), v(1));  // -z
  add_quad(m, v(4), v(5), v(7), v(6));  // +z
  add_quad(m, v(0), v(1), v(5), v(4));  // -y
  add_quad(m, v(2), v(6), v(7), v(3));  // +y
  add_quad(m, v(0), v(4), v(6), v(2));  // -x
  add_quad(m, v(1), v(3), v(7), v(5));  // +x
}

}  // namespace

void TriMesh::finalize() {
  if (triangles.empty() || vertices.size() < 3) {
    throw Error(ErrorCode::kDegenerateMesh, "mesh has no triangles");
  }
  const int nv = static_cast<int>(vertices.size());
  for (const auto& t : triangles) {
    for (int i : t) {
      if (i < 0 || i >= nv) throw Error(ErrorCode::kDegenerateMesh, "triangle index out of range");
    }
  }
  if (!(area() > 0.0)) throw Error(ErrorCode::kDegenerateMesh, "zero total area");
  double d2 = 0.0;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    for (std::size_t j = i + 1; j < vertices.size(); ++j) {
      d2 = std::max(d2, (vertices[i] - vertices[j]).squaredNorm());
    }
  }
  diameter = std::sqrt(d2);
  if (!(diameter > 0.0)) throw Error(ErrorCode::kDegenerateMesh, "zero diameter");
}

double TriMesh::triangle_area(int face) const {
  const auto& t = triangles[face];
  return 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
}

Vec3 TriMesh::triangle_normal(int face) const {
  const auto& t = triangles[face];
  return (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).normalized();
}

double TriMesh::area() const {
  double a = 0.0;
  for (int f = 0; f < static_cast<int>(triangles.size()); ++f) a += triangle_area(f);
  return a;
}

TriMesh make_cylinder(double radius, double height, int segments) {
  TriMesh m;
  const double h = 0.5 * height;
  for (int i = 0; i < segments; ++i) {
    double a = 2.0 * kPi * i / segments;
    m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), -h);
    m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), h);
  }
  int bottom = static_cast<int>(m.vertices.size());
  m.vertices.emplace_back(0.0, 0.0, -h);
  int top = bottom + 1;
  m.vertices.emplace_back(0.0, 0.0, h);
  for (int i = 0; i < segments; ++i) {
    int j = (i + 1) % segments;
    int b0 = 2 * i, t0 = 2 * i + 1, b1 = 2 * j, t1 = 2 * j + 1;
    add_quad(m, b0, b1, t1, t0);
    m.triangles.push_back({top, t0, t1});
    m.triangles.push_back({bottom, b1, b0});
  }
  m.finalize();
  return m;
}

TriMesh make_hex_prism(double circumradius, double height) {
  TriMesh m;
  const double h = 0.5 * height;
  for (int i = 0; i < 6; ++i) {
    double a = 2.0 * kPi * i / 6.0;
    m.vertices.emplace_back(circumradius * std::cos(a), circumradius * std::sin(a), -h);
    m.vertices.emplace_back(circumradius * std::cos(a), circumradius * std::sin(a), h);
  }
  int bottom = 12, top = 13;
  m.vertices.emplace_back(0.0, 0.0, -h);
  m.vertices.emplace_back(0.0, 0.0, h);
  for (int i = 0; i < 6; ++i) {
    int j = (i + 1) % 6;
    add_quad(m, 2 * i, 2 * j, 2 * j + 1, 2 * i + 1);
    m.triangles.push_back({top, 2 * i + 1, 2 * j + 1});
    m.triangles.push_back({bottom, 2 * j, 2 * i});
  }
  m.finalize();
  return m;
}

TriMesh make_cube_with_corner_marker(double side, double marker) {
  TriMesh m;
  const double s = 0.5 * side;
  add_box(m, Vec3(-s, -s, -s), Vec3(s, s, s));
  const double c = 0.5 * marker;
  add_box(m, Vec3(s - c, s - c, s - c), Vec3(s + c, s + c, s + c));
  m.finalize();
  return m;
}

TriMesh make_icosphere(double radius, int subdivisions) {
  TriMesh m;
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                         {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<Triangle> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      int idx = static_cast<int>(v.size()) - 1;
      mid.emplace(key, idx);
      return idx;
    };
    std::vector<Triangle> next;
    for (const auto& tri : f) {
      int a = midpoint(tri[0], tri[1]);
      int b = midpoint(tri[1], tri[2]);
      int c = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  for (auto& p : v) m.vertices.push_back(radius * p);
  m.triangles = std::move(f);
  m.finalize();
  return m;
}

TriMesh read_ply(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("ply", 0) != 0) throw Error(ErrorCode::kFormat, "not a PLY file");
  std::size_t n_vertices = 0, n_faces = 0;
  std::vector<std::string> vertex_props;
  std::string current;
  bool ascii = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      ascii = (fmt == "ascii");
    } else if (tok == "element") {
      std::size_t n = 0;
      ls >> current >> n;
      if (current == "vertex") n_vertices = n;
      if (current == "face") n_faces = n;
    } else if (tok == "property" && current == "vertex") {
      std::string type, name;
      ls >> type >> name;
      vertex_props.push_back(name);
    } else if (tok == "end_header") {
      break;
    }
  }
  if (!ascii) throw Error(ErrorCode::kFormat, "only ASCII PLY is supported");
  auto col = [&](const char* name) {
    auto it = std::find(vertex_props.begin(), vertex_props.end(), name);
    if (it == vertex_props.end()) throw Error(ErrorCode::kFormat, std::string("missing property ") + name);
    return static_cast<std::size_t>(it - vertex_props.begin());
  };
  std::size_t cx = col("x"), cy = col("y"), cz = col("z");
  TriMesh m;
  m.vertices.reserve(n_vertices);
  std::vector<double> row(vertex_props.size());
  for (std::size_t i = 0; i < n_vertices; ++i) {
    for (auto& x : row) {
      if (!(in >> x)) throw Error(ErrorCode::kFormat, "truncated vertex list");
    }
    m.vertices.emplace_back(row[cx], row[cy], row[cz]);
  }
  for (std::size_t i = 0; i < n_faces; ++i) {
    int count = 0;
    if (!(in >> count) || count < 3) throw Error(ErrorCode::kFormat, "bad face record");
    std::vector<int> idx(count);
    for (auto& x : idx) {
      if (!(in >> x)) throw Error(ErrorCode::kFormat, "truncated face list");
    }
    for (int k = 1; k + 1 < count; ++k) m.triangles.push_back({idx[0], idx[k], idx[k + 1]});
  }
  m.finalize();
  return m;
}

void write_ply(const TriMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << mesh.vertices.size() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  out << "element face " << mesh.triangles.size() << "\n";
  out << "property list uchar int vertex_indices\nend_header\n";
  out.precision(17);
  for (const auto& v : mesh.vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t mesh_hash(const TriMesh& mesh) {
  std::uint64_t h = fnv1a(mesh.vertices.data(), mesh.vertices.size() * sizeof(Vec3));
  return fnv1a(mesh.triangles.data(), mesh.triangles.size() * sizeof(Triangle), h);
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Region tests on the barycentric Voronoi regions.
  Vec3 ab = b - a, ac = c - a, ap = p - a;
  double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  Vec3 bp = p - b;
  double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
  Vec3 cp = p - c;
  double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
  double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }
  double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

TriangleLocator::TriangleLocator(const TriMesh& mesh) : mesh_(mesh) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
  Vec3 hi = -lo;
  for (const auto& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  double mean_edge = 0.0;
  for (const auto& t : mesh.triangles) {
    mean_edge += (mesh.vertices[t[0]] - mesh.vertices[t[1]]).norm();
  }
  mean_edge /= static_cast<double>(mesh.triangles.size());
  double extent = (hi - lo).maxCoeff();
  cell_ = std::max({mean_edge, extent / 64.0, 1e-12});
  origin_ = lo - Vec3::Constant(0.5 * cell_);
  for (int i = 0; i < 3; ++i) {
    dims_[i] = std::max(1, static_cast<int>(std::ceil((hi[i] - origin_[i]) / cell_)) + 1);
  }
  cells_.resize(static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2]);
  for (int f = 0; f < static_cast<int>(mesh.triangles.size()); ++f) {
    const auto& t = mesh.triangles[f];
    Vec3 tlo = mesh.vertices[t[0]].cwiseMin(mesh.vertices[t[1]]).cwiseMin(mesh.vertices[t[2]]);
    Vec3 thi = mesh.vertices[t[0]].cwiseMax(mesh.vertices[t[1]]).cwiseMax(mesh.vertices[t[2]]);
    std::array<int, 3> a{}, b{};
    for (int i = 0; i < 3; ++i) {
      a[i] = std::clamp(static_cast<int>(std::floor((tlo[i] - origin_[i]) / cell_)), 0, dims_[i] - 1);
      b[i] = std::clamp(static_cast<int>(std::floor((thi[i] - origin_[i]) / cell_)), 0, dims_[i] - 1);
    }
    for (int x = a[0]; x <= b[0]; ++x)
      for (int y = a[1]; y <= b[1]; ++y)
        for (int z = a[2]; z <= b[2]; ++z) cells_[cell_index(x, y, z)].push_back(f);
  }
}

std::size_t TriangleLocator::cell_index(int x, int y, int z) const {
  return (static_cast<std::size_t>(z) * dims_[1] + y) * dims_[0] + x;
}

int TriangleLocator::nearest(const Vec3& p) const {
  std::array<int, 3> c{};
  for (int i = 0; i < 3; ++i) {
    c[i] = std::clamp(static_cast<int>(std::floor((p[i] - origin_[i]) / cell_)), 0, dims_[i] - 1);
  }
  int best = -1;
  double best_d2 = std::numeric_limits<double>::max();
  const int max_ring = std::max({dims_[0], dims_[1], dims_[2]});
  for (int ring = 0; ring <= max_ring; ++ring) {
    for (int x = c[0] - ring; x <= c[0] + ring; ++x) {
      for (int y = c[1] - ring; y <= c[1] + ring; ++y) {
        for (int z = c[2] - ring; z <= c[2] + ring; ++z) {
          if (std::max({std::abs(x - c[0]), std::abs(y - c[1]), std::abs(z - c[2])}) != ring) continue;
          if (x < 0 || y < 0 || z < 0 || x >= dims_[0] || y >= dims_[1] || z >= dims_[2]) continue;
          for (int f : cells_[cell_index(x, y, z)]) {
            const auto& t = mesh_.triangles[f];
            Vec3 q = closest_point_on_triangle(p, mesh_.vertices[t[0]], mesh_.vertices[t[1]],
                                               mesh_.vertices[t[2]]);
            double d2 = (q - p).squaredNorm();
            if (d2 < best_d2 || (d2 == best_d2 && f < best)) {
              best_d2 = d2;
              best = f;
            }
          }
        }
      }
    }
    // Everything outside the searched block is at least `ring * cell_` away.
    if (best >= 0 && std::sqrt(best_d2) <= ring * cell_) break;
  }
  return best;
}

}  // namespace posedist
