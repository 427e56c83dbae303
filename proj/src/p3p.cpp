#include "posedist/p3p.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <unsupported/Eigen/Polynomials>

#include "posedist/error.hpp"

namespace posedist {
namespace {

// Newton iterations on the three law-of-cosines equations in the depths.
bool polish_depths(Vec3& s, double a2, double b2, double c2, double ca, double cb, double cg) {
  for (int it = 0; it < 12; ++it) {
    Vec3 f(s[1] * s[1] + s[2] * s[2] - 2.0 * s[1] * s[2] * ca - a2,
           s[0] * s[0] + s[2] * s[2] - 2.0 * s[0] * s[2] * cb - b2,
           s[0] * s[0] + s[1] * s[1] - 2.0 * s[0] * s[1] * cg - c2);
    Mat3 j;
    j << 0.0, 2.0 * s[1] - 2.0 * s[2] * ca, 2.0 * s[2] - 2.0 * s[1] * ca,
        2.0 * s[0] - 2.0 * s[2] * cb, 0.0, 2.0 * s[2] - 2.0 * s[0] * cb,
        2.0 * s[0] - 2.0 * s[1] * cg, 2.0 * s[1] - 2.0 * s[0] * cg, 0.0;
    Eigen::FullPivLU<Mat3> lu(j);
    if (!lu.isInvertible()) break;
    Vec3 step = lu.solve(f);
    s -= step;
    if (step.norm() <= 1e-15 * s.norm()) break;
  }
  Vec3 f(s[1] * s[1] + s[2] * s[2] - 2.0 * s[1] * s[2] * ca - a2,
         s[0] * s[0] + s[2] * s[2] - 2.0 * s[0] * s[2] * cb - b2,
         s[0] * s[0] + s[1] * s[1] - 2.0 * s[0] * s[1] * cg - c2);
  return s.allFinite() && (s.array() > 0.0).all() && f.norm() <= 1e-8 * (a2 + b2 + c2);
}

}  // namespace

double reprojection_error(const CameraIntrinsics& k, const Pose& pose, const Vec2& pixel, const Vec3& x) {
  Vec3 xc = pose * x;
  if (!(xc.z() > 0.0)) return std::numeric_limits<double>::infinity();
  return (project_camera_point(k, xc) - pixel).norm();
}

std::vector<Pose> p3p_solve(const CameraIntrinsics& k, const std::array<Vec2, 3>& pixels,
                            const std::array<Vec3, 3>& points) {
  const Vec3 &x1 = points[0], &x2 = points[1], &x3 = points[2];
  double scale2 = std::max({(x2 - x1).squaredNorm(), (x3 - x1).squaredNorm(), (x3 - x2).squaredNorm()});
  if ((x2 - x1).cross(x3 - x1).norm() <= 1e-10 * scale2) {
    throw Error(ErrorCode::kCollinearPoints, "P3P object points are collinear");
  }
  std::array<Vec3, 3> j;
  for (int i = 0; i < 3; ++i) j[i] = k.bearing(pixels[i]);

  // Grunert: s2 = u s1, s3 = v s1; a, b, c are the sides opposite the
  // bearing pairs (2,3), (1,3), (1,2).
  const double a2 = (x2 - x3).squaredNorm(), b2 = (x1 - x3).squaredNorm(), c2 = (x1 - x2).squaredNorm();
  const double ca = j[1].dot(j[2]), cb = j[0].dot(j[2]), cg = j[0].dot(j[1]);
  const double p = (a2 - c2) / b2, q = (a2 + c2) / b2;
  const double ca2 = ca * ca, cb2 = cb * cb, cg2 = cg * cg;

  Eigen::Matrix<double, 5, 1> poly;  // increasing powers of v
  poly[4] = (p - 1.0) * (p - 1.0) - 4.0 * c2 / b2 * ca2;
  poly[3] = 4.0 * (p * (1.0 - p) * cb - (1.0 - q) * ca * cg + 2.0 * c2 / b2 * ca2 * cb);
  poly[2] = 2.0 * (p * p - 1.0 + 2.0 * p * p * cb2 + 2.0 * (b2 - c2) / b2 * ca2 - 4.0 * q * ca * cb * cg +
                   2.0 * (b2 - a2) / b2 * cg2);
  poly[1] = 4.0 * (-p * (1.0 + p) * cb + 2.0 * a2 / b2 * cg2 * cb - (1.0 - q) * ca * cg);
  poly[0] = (1.0 + p) * (1.0 + p) - 4.0 * a2 / b2 * cg2;

  std::vector<double> vs;
  if (std::abs(poly[4]) > 1e-14 * poly.cwiseAbs().maxCoeff()) {
    Eigen::PolynomialSolver<double, 4> solver(poly);
    for (const auto& r : solver.roots()) {
      if (std::abs(r.imag()) <= 1e-4 * (1.0 + std::abs(r.real()))) vs.push_back(r.real());
    }
  } else {
    Eigen::Matrix<double, 4, 1> cubic = poly.head<4>();
    Eigen::PolynomialSolver<double, 3> solver(cubic);
    for (const auto& r : solver.roots()) {
      if (std::abs(r.imag()) <= 1e-4 * (1.0 + std::abs(r.real()))) vs.push_back(r.real());
    }
  }

  std::vector<Pose> out;
  for (double v : vs) {
    if (!(v > 0.0)) continue;
    double den = 2.0 * (cg - v * ca);
    if (std::abs(den) < 1e-14) continue;
    double u = ((p - 1.0) * v * v - 2.0 * p * cb * v + 1.0 + p) / den;
    if (!(u > 0.0)) continue;
    double s1sq = b2 / (1.0 + v * v - 2.0 * v * cb);
    if (!(s1sq > 0.0)) continue;
    double s1 = std::sqrt(s1sq);
    Vec3 s(s1, u * s1, v * s1);
    if (!polish_depths(s, a2, b2, c2, ca, cb, cg)) continue;

    Eigen::Matrix3d src, dst;
    for (int i = 0; i < 3; ++i) {
      src.col(i) = points[i];
      dst.col(i) = s[i] * j[i];
    }
    Eigen::Matrix4d t = Eigen::umeyama(src, dst, false);
    Pose pose{Rotation::from_matrix(t.topLeftCorner<3, 3>()), t.topRightCorner<3, 1>()};
    bool dup = false;
    for (const auto& o : out) {
      if (d_ang(o.rotation, pose.rotation) < 1e-9 && (o.translation - pose.translation).norm() < 1e-9 * (1.0 + pose.translation.norm())) dup = true;
    }
    if (!dup) out.push_back(pose);
  }
  if (out.empty()) throw Error(ErrorCode::kNoRealSolution, "P3P has no real solution");
  return out;
}

}  // namespace posedist
