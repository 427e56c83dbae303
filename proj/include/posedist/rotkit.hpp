#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <random>

namespace posedist {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Element of SO(3). Stored as a unit quaternion; angle-axis is the external
/// representation used in files and on the command line.
class Rotation {
 public:
  Rotation() : q_(Quat::Identity()) {}

  static Rotation from_quaternion(const Quat& q);
  static Rotation from_matrix(const Mat3& m);
  /// Direction is the axis, norm the angle in radians.
  static Rotation from_angle_axis(const Vec3& v);
  static Rotation about(const Vec3& axis, double angle);

  const Quat& quaternion() const { return q_; }
  Mat3 matrix() const { return q_.toRotationMatrix(); }
  Vec3 angle_axis() const;
  /// Rotation angle in [0, pi].
  double angle() const;

  Rotation inverse() const { return Rotation(q_.conjugate()); }
  Rotation operator*(const Rotation& rhs) const;
  Vec3 operator*(const Vec3& v) const { return q_ * v; }

 private:
  explicit Rotation(const Quat& q) : q_(q) {}
  Quat q_;
};

struct Pose {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  Vec3 operator*(const Vec3& x) const { return rotation * x + translation; }
  /// (this * rhs)(x) = this(rhs(x)).
  Pose operator*(const Pose& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }
  Pose inverse() const {
    Rotation inv = rotation.inverse();
    return {inv, -(inv * translation)};
  }
};

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws kInvalidArgument unless fx, fy > 0 and the principal point lies
  /// inside the image.
  void validate() const;
  double diagonal() const;
  /// Unit bearing of a (continuous) pixel coordinate.
  Vec3 bearing(const Vec2& pixel) const;
};

/// Relative rotation angle of a * b^-1, in [0, pi].
double d_ang(const Rotation& a, const Rotation& b);

/// R_{C<-L} * R_{L<-O}.
Rotation compose_frames(const Rotation& cam_from_local, const Rotation& local_from_object);

/// Pinhole projection of a camera-frame point. Throws kNonPositiveDepth.
Vec2 project_camera_point(const CameraIntrinsics& k, const Vec3& xc);
Vec2 project(const CameraIntrinsics& k, const Pose& pose, const Vec3& x);

/// Minimal rotation taking the optical axis (0,0,1) onto `ray`.
Rotation align_optical_axis(const Vec3& ray);
Rotation allo_to_ego(const Rotation& allocentric, const Vec3& ray_to_object_center);
Rotation ego_to_allo(const Rotation& egocentric, const Vec3& ray_to_object_center);

/// Haar-uniform rotation.
Rotation random_rotation(std::mt19937_64& rng);
/// Uniform unit vector on S^2.
Vec3 random_unit_vector(std::mt19937_64& rng);

/// Unit axis and two orthonormal vectors completing a right-handed basis
/// (e1, e2, axis).
struct AxisBasis {
  Vec3 e1;
  Vec3 e2;
  Vec3 axis;
  explicit AxisBasis(const Vec3& axis);
};

}  // namespace posedist
