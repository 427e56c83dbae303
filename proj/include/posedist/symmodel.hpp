#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "posedist/mesh.hpp"
#include "posedist/rotkit.hpp"

namespace posedist {

enum class SymmetryKind { kAsymmetric, kDiscrete, kContinuous };

std::string to_string(SymmetryKind kind);
SymmetryKind symmetry_kind_from_string(const std::string& s);

/// Sphere in object coordinates. Surface points inside it carry descriptors
/// that ignore the declared symmetry (a texture mark).
struct MarkerRegion {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

/// Proper symmetry group of an object. The axis passes through the object
/// origin.
struct SymmetrySpec {
  SymmetryKind kind = SymmetryKind::kAsymmetric;
  Vec3 axis = Vec3::UnitZ();
  int order = 1;
  std::vector<MarkerRegion> markers;

  static SymmetrySpec asymmetric();
  static SymmetrySpec discrete(const Vec3& axis, int n);
  static SymmetrySpec continuous(const Vec3& axis);

  /// Throws kInvalidArgument (non-unit axis, n < 2, bad marker radius).
  void validate() const;
  bool axial() const { return kind != SymmetryKind::kAsymmetric; }
  /// Finite group elements: {I} for asymmetric, rot(axis, 2 pi i / n) for
  /// discrete. Continuous symmetries return rotations at `step` radians.
  std::vector<Rotation> group_elements(double step = 0.0) const;
  bool in_marker(const Vec3& x) const;
};

/// Random-Fourier-feature embedding of the symmetry-quotient coordinates.
class DescriptorField {
 public:
  DescriptorField() = default;
  DescriptorField(const SymmetrySpec& symmetry, int dim, double bandwidth, std::uint64_t seed);

  int dim() const { return dim_; }
  double bandwidth() const { return bandwidth_; }
  std::uint64_t seed() const { return seed_; }
  const SymmetrySpec& symmetry() const { return symmetry_; }

  /// Metric quotient coordinates of x (length 3, 4 or 2 by kind).
  Eigen::VectorXd quotient(const Vec3& x) const;
  /// Unit descriptor.
  Eigen::VectorXd operator()(const Vec3& x) const;

  const Eigen::MatrixXd& omega() const { return omega_; }
  const Eigen::VectorXd& phase() const { return phase_; }
  const Eigen::MatrixXd& marker_omega() const { return marker_omega_; }
  const Eigen::VectorXd& marker_phase() const { return marker_phase_; }
  void set_features(Eigen::MatrixXd omega, Eigen::VectorXd phase, Eigen::MatrixXd marker_omega,
                    Eigen::VectorXd marker_phase);

 private:
  SymmetrySpec symmetry_;
  int dim_ = 0;
  double bandwidth_ = 0.0;
  std::uint64_t seed_ = 0;
  Eigen::MatrixXd omega_;
  Eigen::VectorXd phase_;
  Eigen::MatrixXd marker_omega_;
  Eigen::VectorXd marker_phase_;
};

Eigen::VectorXd canonical_descriptor(const DescriptorField& field, const Vec3& x);

/// R_{L_X <- O}. Identity for asymmetric objects; otherwise the rows are
/// (x_L, y_L, axis) with x_L the normalised off-axis component of x.
/// Throws kOnAxisPoint when x is closer than 1e-6 * diameter to the axis.
Rotation canonical_local_frame(const SymmetrySpec& symmetry, const Vec3& x, double diameter);

/// Evenly spaced surface points. Discrete symmetries sample one wedge and
/// replicate it; continuous symmetries place rings on the meridian profile.
struct SurfaceSample {
  std::vector<Vec3> points;
  /// Target spacing used by the sampler (meters).
  double spacing = 0.0;
};

SurfaceSample sample_surface(const TriMesh& mesh, std::size_t max_points, std::uint64_t seed,
                             const SymmetrySpec& symmetry = SymmetrySpec::asymmetric());

/// sqrt(2 A / (sqrt(3) N)): hexagonal-packing spacing for N points on area A.
double ideal_spacing(double area, std::size_t n);

/// Uniform-grid nearest-neighbour index over a fixed point set.
class PointIndex {
 public:
  PointIndex() = default;
  PointIndex(std::vector<Vec3> points, double cell);
  int nearest(const Vec3& p) const;

 private:
  std::vector<Vec3> points_;
  Vec3 origin_ = Vec3::Zero();
  double cell_ = 1.0;
  std::array<int, 3> dims_{};
  std::vector<int> start_;
  std::vector<int> items_;
  std::size_t flat(int x, int y, int z) const;
};

struct SymModelParams {
  std::size_t max_points = 50000;
  int descriptor_dim = 64;
  /// Logit scale of the similarity, log-softmax(beta * dot).
  double beta = 20.0;
  /// Feature bandwidth as a multiple of the sampling spacing.
  double bandwidth_factor = 1.0;
  std::uint64_t seed = 0;
};

struct SymModel {
  std::vector<Vec3> points;
  /// D x N, unit columns.
  Eigen::MatrixXd descriptors;
  std::vector<Rotation> frames;
  SymmetrySpec symmetry;
  SymModelParams params;
  DescriptorField field;
  double spacing = 0.0;
  TriMesh mesh;
  std::uint64_t mesh_hash = 0;

  std::size_t size() const { return points.size(); }
  int dim() const { return static_cast<int>(descriptors.rows()); }
  double diameter() const { return mesh.diameter; }
  /// Nearest sampled point.
  int nearest(const Vec3& x) const { return index_.nearest(x); }
  void rebuild_index();

 private:
  PointIndex index_;
};

SymModel build_symmodel(const TriMesh& mesh, const SymmetrySpec& symmetry,
                        const SymModelParams& params = {});

/// Bundled objects: "cylinder", "hex_prism", "marked_cube", "marked_prism".
struct BundledObject {
  TriMesh mesh;
  SymmetrySpec symmetry;
};
BundledObject bundled_object(const std::string& name);
std::vector<std::string> bundled_object_names();

}  // namespace posedist
