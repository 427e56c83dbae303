#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "posedist/rotkit.hpp"

namespace posedist {

using Triangle = std::array<int, 3>;

/// Triangle mesh in meters. `diameter` is the maximum pairwise vertex distance.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  double diameter = 0.0;

  /// Recomputes the diameter and throws kDegenerateMesh for out-of-range
  /// indices, no triangles, or zero total area.
  void finalize();
  double area() const;
  double triangle_area(int face) const;
  Vec3 triangle_normal(int face) const;
};

TriMesh make_cylinder(double radius, double height, int segments = 256);
TriMesh make_hex_prism(double circumradius, double height);
/// Axis-aligned cube of side `side` centred at the origin with a small cube of
/// side `marker` glued onto the (+,+,+) corner.
TriMesh make_cube_with_corner_marker(double side, double marker);
TriMesh make_icosphere(double radius, int subdivisions);

/// ASCII PLY with vertex x/y/z and polygonal faces (fan-triangulated).
TriMesh read_ply(const std::filesystem::path& path);
void write_ply(const TriMesh& mesh, const std::filesystem::path& path);

/// FNV-1a over the raw vertex and index data.
std::uint64_t mesh_hash(const TriMesh& mesh);
std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h = 1469598103934665603ull);

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Uniform grid over triangle bounding boxes for nearest-triangle queries.
class TriangleLocator {
 public:
  explicit TriangleLocator(const TriMesh& mesh);
  /// Index of the triangle closest to p.
  int nearest(const Vec3& p) const;

 private:
  const TriMesh& mesh_;
  Vec3 origin_;
  double cell_;
  std::array<int, 3> dims_{};
  std::vector<std::vector<int>> cells_;
  std::size_t cell_index(int x, int y, int z) const;
};

}  // namespace posedist
