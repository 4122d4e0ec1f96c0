#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "quartet/rng.hpp"

namespace quartet {

using Point3 = Eigen::Vector3d;
using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;
using Vector4 = Eigen::Vector4d;

inline constexpr double kOrthogonalityTolerance = 1e-9;

// N points with optional per-point part ids. When labels are present they
// are contiguous from 0 and have one entry per point.
struct PointCloud {
  std::vector<Point3> points;
  std::vector<int> labels;

  PointCloud() = default;
  explicit PointCloud(std::vector<Point3> pts, std::vector<int> lbls = {})
      : points(std::move(pts)), labels(std::move(lbls)) {}

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_labels() const { return !labels.empty(); }

  // Number of distinct parts (1 for unlabeled clouds).
  int part_count() const;

  // Points of part j in their original order, unlabeled.
  PointCloud part(int j) const;

  // Indices of the points belonging to part j.
  std::vector<std::size_t> part_indices(int j) const;

  Point3 centroid() const;

  // Throws kPrecondition on empty clouds, non-finite coordinates, label
  // count mismatch or non-contiguous part ids.
  void validate() const;
};

// Plane {x : normal . x = offset} with a unit normal whose first nonzero
// component (beyond 1e-12) is positive.
class ReflectionPlane {
 public:
  // Normalizes and canonicalizes; throws kPrecondition for a zero normal.
  ReflectionPlane(const Vector3& normal, double offset);

  const Vector3& normal() const { return normal_; }
  double offset() const { return offset_; }

  double signed_distance(const Point3& p) const { return normal_.dot(p) - offset_; }

  // (n, w * d) embedding used by the reflection metric space.
  Vector4 embedding(double offset_weight = 1.0) const;

  bool operator==(const ReflectionPlane&) const = default;

 private:
  Vector3 normal_;
  double offset_;
};

// Returns (n, d) or (-n, -d), whichever puts a positive sign on the first
// component of n with magnitude above 1e-12.
std::pair<Vector3, double> canonicalize_plane(const Vector3& normal, double offset);

struct RigidTransform {
  Matrix3 linear = Matrix3::Identity();
  Vector3 translation = Vector3::Zero();

  static RigidTransform identity() { return {}; }

  Point3 apply(const Point3& p) const { return linear * p + translation; }
  RigidTransform inverse() const;
  bool is_orthogonal(double tol = kOrthogonalityTolerance) const;
  // Projects `linear` onto the nearest orthogonal matrix.
  RigidTransform reorthonormalized() const;
};

// (a . b)(x) = a(b(x)).
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

// Frobenius norm of the difference of the flattened 3x4 matrices.
double transform_distance(const RigidTransform& a, const RigidTransform& b);

Point3 reflect_point(const ReflectionPlane& plane, const Point3& p);
RigidTransform reflection_to_transform(const ReflectionPlane& plane);

// reflect(second) . reflect(first). Intersecting planes give a rotation about
// their common line by twice the dihedral angle. Parallel distinct planes
// would give a translation and throw kTranslationResult.
RigidTransform rotation_from_reflections(const ReflectionPlane& first,
                                         const ReflectionPlane& second);

// x_normalized = (x - center) / scale.
struct Normalization {
  Vector3 center = Vector3::Zero();
  double scale = 1.0;

  Point3 forward(const Point3& p) const { return (p - center) / scale; }
  Point3 inverse(const Point3& p) const { return p * scale + center; }

  // Expresses a plane given in the original frame in the normalized frame,
  // and back.
  ReflectionPlane forward(const ReflectionPlane& plane) const;
  ReflectionPlane inverse(const ReflectionPlane& plane) const;
};

// Centers at the centroid and scales the farthest point to radius 1. Throws
// kDegenerateCloud if every point coincides.
std::pair<PointCloud, Normalization> normalize_cloud(const PointCloud& cloud);

PointCloud apply_inverse(const Normalization& norm, const PointCloud& cloud);

// Resizes to exactly target_n points drawn from the input: without
// replacement when shrinking, every point kept plus random duplicates when
// growing. Labels follow their points.
PointCloud resample_part(const PointCloud& cloud, std::size_t target_n, Rng& rng);

}  // namespace quartet
