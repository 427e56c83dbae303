#include "posedist/rotkit.hpp"

#include <cmath>

#include "posedist/error.hpp"

namespace posedist {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::kLevelTooLarge: return "LevelTooLarge";
    case ErrorCode::kDegenerateMesh: return "DegenerateMesh";
    case ErrorCode::kOnAxisPoint: return "OnAxisPoint";
    case ErrorCode::kEmptyMask: return "EmptyMask";
    case ErrorCode::kObjectOutOfFrame: return "ObjectOutOfFrame";
    case ErrorCode::kEmptyMaskAfterOcclusion: return "EmptyMaskAfterOcclusion";
    case ErrorCode::kPixelOffMask: return "PixelOffMask";
    case ErrorCode::kCollinearPoints: return "CollinearPoints";
    case ErrorCode::kNoRealSolution: return "NoRealSolution";
    case ErrorCode::kTooFewCorrespondences: return "TooFewCorrespondences";
    case ErrorCode::kNoVisiblePoints: return "NoVisiblePoints";
    case ErrorCode::kEmptyGt: return "EmptyGt";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kFormat: return "Format";
  }
  return "Unknown";
}

Rotation Rotation::from_quaternion(const Quat& q) {
  double n = q.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorCode::kInvalidArgument, "quaternion must be finite and non-zero");
  }
  return Rotation(Quat(q.coeffs() / n));
}

Rotation Rotation::from_matrix(const Mat3& m) {
  return from_quaternion(Quat(m));
}

Rotation Rotation::from_angle_axis(const Vec3& v) {
  double angle = v.norm();
  if (angle < 1e-300) return Rotation();
  return Rotation(Quat(Eigen::AngleAxisd(angle, v / angle)));
}

Rotation Rotation::about(const Vec3& axis, double angle) {
  return Rotation(Quat(Eigen::AngleAxisd(angle, axis.normalized())));
}

Vec3 Rotation::angle_axis() const {
  Quat q = q_;
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  double s = q.vec().norm();
  if (s < 1e-300) return Vec3::Zero();
  double angle = 2.0 * std::atan2(s, q.w());
  return q.vec() * (angle / s);
}

double Rotation::angle() const {
  return 2.0 * std::atan2(q_.vec().norm(), std::abs(q_.w()));
}

Rotation Rotation::operator*(const Rotation& rhs) const {
  Quat q = q_ * rhs.q_;
  // Renormalise; products of unit quaternions drift by O(eps) per step.
  return Rotation(Quat(q.coeffs() / q.norm()));
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "image size must be positive");
  }
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw Error(ErrorCode::kInvalidArgument, "principal point outside the image");
  }
}

double CameraIntrinsics::diagonal() const {
  return std::hypot(static_cast<double>(width), static_cast<double>(height));
}

Vec3 CameraIntrinsics::bearing(const Vec2& pixel) const {
  return Vec3((pixel.x() - cx) / fx, (pixel.y() - cy) / fy, 1.0).normalized();
}

double d_ang(const Rotation& a, const Rotation& b) {
  // Angle of the relative quaternion via atan2: exact near 0 and pi, where
  // acos of the dot product loses half the significant digits.
  Quat rel = a.quaternion().conjugate() * b.quaternion();
  return 2.0 * std::atan2(rel.vec().norm(), std::abs(rel.w()));
}

Rotation compose_frames(const Rotation& cam_from_local, const Rotation& local_from_object) {
  return cam_from_local * local_from_object;
}

Vec2 project_camera_point(const CameraIntrinsics& k, const Vec3& xc) {
  if (!(xc.z() > 0.0)) {
    throw Error(ErrorCode::kNonPositiveDepth, "point behind or on the camera plane");
  }
  return {k.fx * xc.x() / xc.z() + k.cx, k.fy * xc.y() / xc.z() + k.cy};
}

Vec2 project(const CameraIntrinsics& k, const Pose& pose, const Vec3& x) {
  return project_camera_point(k, pose * x);
}

Rotation align_optical_axis(const Vec3& ray) {
  Vec3 r = ray.normalized();
  if (!(r.z() > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "viewing ray must have positive depth");
  }
  return Rotation::from_quaternion(Quat::FromTwoVectors(Vec3::UnitZ(), r));
}

Rotation allo_to_ego(const Rotation& allocentric, const Vec3& ray_to_object_center) {
  return align_optical_axis(ray_to_object_center) * allocentric;
}

Rotation ego_to_allo(const Rotation& egocentric, const Vec3& ray_to_object_center) {
  return align_optical_axis(ray_to_object_center).inverse() * egocentric;
}

Rotation random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Quat q;
  do {
    q = Quat(n(rng), n(rng), n(rng), n(rng));
  } while (q.norm() < 1e-12);
  return Rotation::from_quaternion(q);
}

Vec3 random_unit_vector(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-12);
  return v.normalized();
}

AxisBasis::AxisBasis(const Vec3& a) : axis(a.normalized()) {
  Vec3 helper = std::abs(axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  e1 = (helper - helper.dot(axis) * axis).normalized();
  e2 = axis.cross(e1);
}

}  // namespace posedist
