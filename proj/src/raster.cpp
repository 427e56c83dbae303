#include "posedist/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "posedist/error.hpp"

namespace posedist {

RenderBuffers rasterize(const TriMesh& mesh, const CameraIntrinsics& k, const Pose& pose) {
  RenderBuffers rb;
  rb.width = k.width;
  rb.height = k.height;
  const std::size_t npix = static_cast<std::size_t>(k.width) * k.height;
  rb.depth.assign(npix, std::numeric_limits<double>::infinity());
  rb.triangle.assign(npix, -1);

  std::vector<Vec3> cam(mesh.vertices.size());
  std::vector<Vec2> px(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    cam[i] = pose * mesh.vertices[i];
    if (!(cam[i].z() > 0.0)) throw Error(ErrorCode::kNonPositiveDepth, "mesh vertex behind the camera");
    px[i] = project_camera_point(k, cam[i]);
  }

  for (int f = 0; f < static_cast<int>(mesh.triangles.size()); ++f) {
    const auto& t = mesh.triangles[f];
    const Vec2 &a = px[t[0]], &b = px[t[1]], &c = px[t[2]];
    double area = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
    if (std::abs(area) < 1e-14) continue;
    int u0 = std::max(0, static_cast<int>(std::ceil(std::min({a.x(), b.x(), c.x()}))));
    int u1 = std::min(k.width - 1, static_cast<int>(std::floor(std::max({a.x(), b.x(), c.x()}))));
    int v0 = std::max(0, static_cast<int>(std::ceil(std::min({a.y(), b.y(), c.y()}))));
    int v1 = std::min(k.height - 1, static_cast<int>(std::floor(std::max({a.y(), b.y(), c.y()}))));
    if (u0 > u1 || v0 > v1) continue;
    // Plane of the triangle in camera coordinates: depth along a pixel ray
    // d = ((u-cx)/fx, (v-cy)/fy, 1) is (n . p0) / (n . d).
    Vec3 n = (cam[t[1]] - cam[t[0]]).cross(cam[t[2]] - cam[t[0]]);
    double np0 = n.dot(cam[t[0]]);
    const double sgn = area > 0.0 ? 1.0 : -1.0;
    for (int v = v0; v <= v1; ++v) {
      for (int u = u0; u <= u1; ++u) {
        Vec2 p(u, v);
        double w0 = sgn * ((b - a).x() * (p - a).y() - (b - a).y() * (p - a).x());
        double w1 = sgn * ((c - b).x() * (p - b).y() - (c - b).y() * (p - b).x());
        double w2 = sgn * ((a - c).x() * (p - c).y() - (a - c).y() * (p - c).x());
        if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
        Vec3 d((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
        double nd = n.dot(d);
        if (std::abs(nd) < 1e-300) continue;
        double z = np0 / nd;
        if (!(z > 0.0)) continue;
        std::size_t i = static_cast<std::size_t>(v) * k.width + u;
        if (z < rb.depth[i] || (z == rb.depth[i] && f < rb.triangle[i])) {
          rb.depth[i] = z;
          rb.triangle[i] = f;
        }
      }
    }
  }
  return rb;
}

bool fully_in_frame(const TriMesh& mesh, const CameraIntrinsics& k, const Pose& pose) {
  for (const auto& v : mesh.vertices) {
    Vec3 xc = pose * v;
    if (!(xc.z() > 0.0)) return false;
    Vec2 p = project_camera_point(k, xc);
    if (p.x() < 0.0 || p.y() < 0.0 || p.x() > k.width - 1 || p.y() > k.height - 1) return false;
  }
  return true;
}

std::vector<Vec3> camera_vertices(const TriMesh& mesh, const Pose& pose) {
  std::vector<Vec3> cam(mesh.vertices.size());
  for (std::size_t i = 0; i < cam.size(); ++i) cam[i] = pose * mesh.vertices[i];
  return cam;
}

double first_hit_depth(const TriMesh& mesh, const std::vector<Vec3>& cam, const Vec3& xc,
                       const std::vector<int>& triangles) {
  // Moller-Trumbore along the ray from the camera centre through xc,
  // parametrised so that t is the camera depth.
  const Vec3 dir = xc / xc.z();
  double best = std::numeric_limits<double>::infinity();
  for (int f : triangles) {
    const auto& t = mesh.triangles[f];
    const Vec3& p0 = cam[t[0]];
    Vec3 e1 = cam[t[1]] - p0;
    Vec3 e2 = cam[t[2]] - p0;
    Vec3 pv = dir.cross(e2);
    double det = e1.dot(pv);
    if (std::abs(det) < 1e-18) continue;
    double inv = 1.0 / det;
    Vec3 tv = -p0;
    double u = tv.dot(pv) * inv;
    const double tol = 1e-9;
    if (u < -tol || u > 1.0 + tol) continue;
    Vec3 qv = tv.cross(e1);
    double v = dir.dot(qv) * inv;
    if (v < -tol || u + v > 1.0 + tol) continue;
    double z = e2.dot(qv) * inv;
    if (z > 0.0) best = std::min(best, z);
  }
  return best;
}

}  // namespace posedist
