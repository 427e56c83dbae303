#pragma once

#include <vector>

#include "posedist/mesh.hpp"
#include "posedist/rotkit.hpp"

namespace posedist {

/// Z-buffer and triangle-id buffer sampled at pixel centres (integer
/// coordinates). Pixel (u, v) is stored at v * width + u.
struct RenderBuffers {
  int width = 0;
  int height = 0;
  std::vector<double> depth;  // camera z, +inf where empty
  std::vector<int> triangle;  // -1 where empty

  bool covered(int u, int v) const {
    return u >= 0 && v >= 0 && u < width && v < height && triangle[v * width + u] >= 0;
  }
};

/// Rasterises the mesh at `pose`. Throws kNonPositiveDepth if any vertex is
/// at or behind the camera plane.
RenderBuffers rasterize(const TriMesh& mesh, const CameraIntrinsics& k, const Pose& pose);

/// True if every mesh vertex projects inside the image.
bool fully_in_frame(const TriMesh& mesh, const CameraIntrinsics& k, const Pose& pose);

std::vector<Vec3> camera_vertices(const TriMesh& mesh, const Pose& pose);

/// Depth of the first hit of the ray through camera point `xc` with the
/// listed triangles, +inf if none is hit. `cam` holds the mesh vertices in
/// camera coordinates.
double first_hit_depth(const TriMesh& mesh, const std::vector<Vec3>& cam, const Vec3& xc,
                       const std::vector<int>& triangles);

}  // namespace posedist
