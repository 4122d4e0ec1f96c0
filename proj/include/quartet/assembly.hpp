#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "quartet/geom.hpp"
#include "quartet/rng.hpp"
#include "quartet/sampler.hpp"

namespace quartet {

inline constexpr int kAssemblerWidth = 9;
inline constexpr double kMinAssemblerScale = 1e-3;

// Places a canonical part: per-axis scale, then rotation R = Rx(a) Ry(b) Rz(c)
// (intrinsic XYZ Euler angles), then translation.
struct Assembler {
  Vector3 translation = Vector3::Zero();
  Vector3 euler = Vector3::Zero();  // radians, each in (-pi, pi]
  Vector3 scale = Vector3::Ones();  // strictly positive

  Matrix3 rotation() const;
  Point3 apply(const Point3& p) const;
  Point3 apply_inverse(const Point3& p) const;

  // (tx, ty, tz, a, b, c, sx, sy, sz)
  Eigen::Matrix<double, kAssemblerWidth, 1> flatten() const;
  static Assembler from_flat(std::span<const double> values);

  // Throws kPrecondition for non-positive scales or out-of-range angles.
  void validate() const;
};

using AssemblerSet = std::vector<Assembler>;

Matrix3 euler_xyz_to_matrix(const Vector3& euler);
// Inverse of euler_xyz_to_matrix for proper rotations. When the pitch is
// within 1e-6 of +-pi/2 the last angle is folded to zero.
Vector3 matrix_to_euler_xyz(const Matrix3& rotation);

// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

PointCloud apply_assembler(const Assembler& assembler, const PointCloud& part);

// Union of the placed parts; point j-th part carries label j.
PointCloud compose_shape(const std::vector<PointCloud>& parts, const AssemblerSet& assemblers);

struct AssemblerFit {
  Assembler assembler;
  double rms = 0;  // residual root-mean-square distance
};

// Least-squares scale-rotate-translate fit mapping `canonical` onto `placed`
// (same size, corresponding order). Throws kDegenerateFit when the canonical
// part has no spread along some axis.
AssemblerFit fit_assembler(const PointCloud& canonical, const PointCloud& placed);

// Splits a labeled shape into canonical parts (centered, principal axes,
// unit RMS spread per axis) and the assemblers that put them back.
struct Decomposition {
  std::vector<PointCloud> canonical_parts;
  AssemblerSet assemblers;
};
Decomposition decompose_shape(const PointCloud& shape);

Vector flatten_assemblers(const AssemblerSet& set);
// Decodes 9 * M values: scales clamped to >= 1e-3, angles wrapped.
AssemblerSet project_assembler_set(const Vector& raw);

// Langevin sampling in 9 * M dimensions over flattened assembler sets.
AssemblerSet sample_assembler_set(const VectorDb& db, const NoiseSchedule& schedule,
                                  const LangevinConfig& config, Rng& rng);

}  // namespace quartet
