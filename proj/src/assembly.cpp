#include "quartet/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "quartet/error.hpp"

namespace quartet {

namespace {

constexpr double kGimbalTolerance = 1e-6;
constexpr int kFitIterations = 50;

Matrix3 nearest_rotation(const Matrix3& m) {
  Eigen::JacobiSVD<Matrix3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3 d = Matrix3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) d(2, 2) = -1;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

}  // namespace

double wrap_angle(double angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double a = std::remainder(angle, kTwoPi);  // [-pi, pi]
  if (a <= -std::numbers::pi) a += kTwoPi;
  return a;
}

Matrix3 euler_xyz_to_matrix(const Vector3& euler) {
  return (Eigen::AngleAxisd(euler.x(), Vector3::UnitX()) *
          Eigen::AngleAxisd(euler.y(), Vector3::UnitY()) *
          Eigen::AngleAxisd(euler.z(), Vector3::UnitZ()))
      .toRotationMatrix();
}

Vector3 matrix_to_euler_xyz(const Matrix3& r) {
  // atan2 keeps full precision near +-pi/2 where asin does not
  const double b = std::atan2(r(0, 2), std::hypot(r(0, 0), r(0, 1)));
  double a = 0, c = 0;
  if (std::abs(std::abs(b) - std::numbers::pi / 2) > kGimbalTolerance) {
    a = std::atan2(-r(1, 2), r(2, 2));
    c = std::atan2(-r(0, 1), r(0, 0));
  } else {
    a = std::atan2(r(2, 1), r(1, 1));
  }
  return {wrap_angle(a), wrap_angle(b), wrap_angle(c)};
}

Matrix3 Assembler::rotation() const { return euler_xyz_to_matrix(euler); }

Point3 Assembler::apply(const Point3& p) const {
  return rotation() * scale.cwiseProduct(p) + translation;
}

Point3 Assembler::apply_inverse(const Point3& p) const {
  return (rotation().transpose() * (p - translation)).cwiseQuotient(scale);
}

Eigen::Matrix<double, kAssemblerWidth, 1> Assembler::flatten() const {
  Eigen::Matrix<double, kAssemblerWidth, 1> v;
  v << translation, euler, scale;
  return v;
}

Assembler Assembler::from_flat(std::span<const double> values) {
  if (values.size() != static_cast<std::size_t>(kAssemblerWidth)) {
    throw Error(ErrorCode::kPrecondition, "assembler block must hold 9 values");
  }
  Assembler a;
  a.translation = {values[0], values[1], values[2]};
  a.euler = {values[3], values[4], values[5]};
  a.scale = {values[6], values[7], values[8]};
  a.validate();
  return a;
}

void Assembler::validate() const {
  if (!(scale.minCoeff() > 0) || !scale.allFinite()) {
    throw Error(ErrorCode::kPrecondition, "assembler scales must be positive");
  }
  for (int i = 0; i < 3; ++i) {
    if (!(euler[i] > -std::numbers::pi && euler[i] <= std::numbers::pi)) {
      throw Error(ErrorCode::kPrecondition, "assembler angles must lie in (-pi, pi]");
    }
  }
  if (!translation.allFinite()) {
    throw Error(ErrorCode::kPrecondition, "assembler translation must be finite");
  }
}

PointCloud apply_assembler(const Assembler& assembler, const PointCloud& part) {
  const Matrix3 r = assembler.rotation();
  PointCloud out = part;
  for (auto& p : out.points) p = r * assembler.scale.cwiseProduct(p) + assembler.translation;
  return out;
}

PointCloud compose_shape(const std::vector<PointCloud>& parts, const AssemblerSet& assemblers) {
  if (parts.size() != assemblers.size()) {
    throw Error(ErrorCode::kSizeMismatch, "need exactly one assembler per part (" +
                                              std::to_string(parts.size()) + " parts, " +
                                              std::to_string(assemblers.size()) + " assemblers)");
  }
  PointCloud shape;
  for (std::size_t j = 0; j < parts.size(); ++j) {
    const PointCloud placed = apply_assembler(assemblers[j], parts[j]);
    shape.points.insert(shape.points.end(), placed.points.begin(), placed.points.end());
    shape.labels.insert(shape.labels.end(), placed.size(), static_cast<int>(j));
  }
  return shape;
}

AssemblerFit fit_assembler(const PointCloud& canonical, const PointCloud& placed) {
  if (canonical.size() != placed.size()) {
    throw Error(ErrorCode::kSizeMismatch, "canonical and placed parts differ in size");
  }
  canonical.validate();
  const std::size_t n = canonical.size();
  const Point3 pc = canonical.centroid(), qc = placed.centroid();
  Eigen::Matrix3Xd p(3, n), q(3, n);
  for (std::size_t i = 0; i < n; ++i) {
    p.col(static_cast<Eigen::Index>(i)) = canonical.points[i] - pc;
    q.col(static_cast<Eigen::Index>(i)) = placed.points[i] - qc;
  }

  const Matrix3 ppt = p * p.transpose();
  const Eigen::SelfAdjointEigenSolver<Matrix3> spread(ppt);
  const double largest = std::max(spread.eigenvalues().maxCoeff(), 1e-300);
  if (spread.eigenvalues().minCoeff() <= 1e-12 * largest) {
    const Vector3 axis = spread.eigenvectors().col(0);
    throw Error(ErrorCode::kDegenerateFit,
                "canonical part has no spread along axis (" + std::to_string(axis.x()) + ", " +
                    std::to_string(axis.y()) + ", " + std::to_string(axis.z()) + ")");
  }

  // Initial guess from the unconstrained linear map A = R S: column norms of A
  // are the per-axis scales.
  const Matrix3 linear = q * p.transpose() * ppt.inverse();
  Vector3 scale = linear.colwise().norm().transpose().cwiseMax(kMinAssemblerScale);
  Matrix3 rotation = nearest_rotation(linear * scale.cwiseInverse().asDiagonal());

  // Alternate: Procrustes on scale-whitened coordinates, then per-axis
  // least-squares scales in the rotated frame.
  const Vector3 p_sq = p.rowwise().squaredNorm();
  for (int it = 0; it < kFitIterations; ++it) {
    const Eigen::Matrix3Xd scaled = scale.asDiagonal() * p;
    rotation = nearest_rotation(q * scaled.transpose());
    const Eigen::Matrix3Xd back = rotation.transpose() * q;
    const Vector3 next = (back.cwiseProduct(p).rowwise().sum().cwiseQuotient(p_sq))
                             .cwiseMax(kMinAssemblerScale);
    const double change = (next - scale).norm();
    scale = next;
    if (change < 1e-15 * std::max(1.0, scale.norm())) break;
  }

  AssemblerFit fit;
  fit.assembler.scale = scale;
  fit.assembler.euler = matrix_to_euler_xyz(rotation);
  const Matrix3 r = fit.assembler.rotation();
  fit.assembler.translation = qc - r * scale.cwiseProduct(pc);
  double sq = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sq += (fit.assembler.apply(canonical.points[i]) - placed.points[i]).squaredNorm();
  }
  fit.rms = std::sqrt(sq / static_cast<double>(n));
  return fit;
}

Decomposition decompose_shape(const PointCloud& shape) {
  shape.validate();
  Decomposition out;
  for (int j = 0; j < shape.part_count(); ++j) {
    const PointCloud part = shape.part(j);
    const Point3 c = part.centroid();
    Matrix3 cov = Matrix3::Zero();
    for (const auto& pt : part.points) cov += (pt - c) * (pt - c).transpose();
    cov /= static_cast<double>(part.size());
    const Eigen::SelfAdjointEigenSolver<Matrix3> eig(cov);
    Matrix3 axes = eig.eigenvectors();
    if (axes.determinant() < 0) axes.col(0) *= -1;
    const Vector3 stddev = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    if (stddev.minCoeff() <= 1e-9 * std::max(1.0, stddev.maxCoeff())) {
      throw Error(ErrorCode::kDegenerateFit,
                  "part " + std::to_string(j) + " is flat; cannot canonicalize");
    }
    Assembler a;
    a.translation = c;
    a.euler = matrix_to_euler_xyz(axes);
    a.scale = stddev;
    const Matrix3 r = a.rotation();
    PointCloud canonical;
    for (const auto& pt : part.points) {
      canonical.points.push_back((r.transpose() * (pt - c)).cwiseQuotient(stddev));
    }
    out.canonical_parts.push_back(std::move(canonical));
    out.assemblers.push_back(a);
  }
  return out;
}

Vector flatten_assemblers(const AssemblerSet& set) {
  Vector v(static_cast<Eigen::Index>(set.size()) * kAssemblerWidth);
  for (std::size_t j = 0; j < set.size(); ++j) {
    v.segment<kAssemblerWidth>(static_cast<Eigen::Index>(j) * kAssemblerWidth) = set[j].flatten();
  }
  return v;
}

AssemblerSet project_assembler_set(const Vector& raw) {
  if (raw.size() == 0 || raw.size() % kAssemblerWidth != 0) {
    throw Error(ErrorCode::kPrecondition, "assembler vectors hold 9 values per part");
  }
  AssemblerSet set(static_cast<std::size_t>(raw.size() / kAssemblerWidth));
  for (std::size_t j = 0; j < set.size(); ++j) {
    const auto block = raw.segment<kAssemblerWidth>(static_cast<Eigen::Index>(j) * kAssemblerWidth);
    Assembler& a = set[j];
    a.translation = block.head<3>();
    for (int i = 0; i < 3; ++i) a.euler[i] = wrap_angle(block[3 + i]);
    a.scale = block.tail<3>().cwiseMax(kMinAssemblerScale);
  }
  return set;
}

AssemblerSet sample_assembler_set(const VectorDb& db, const NoiseSchedule& schedule,
                                  const LangevinConfig& config, Rng& rng) {
  if (db.dim() == 0 || db.dim() % kAssemblerWidth != 0) {
    throw Error(ErrorCode::kPrecondition, "assembler db entries hold 9 values per part");
  }
  return project_assembler_set(langevin_sample(db, schedule, config, rng));
}

}  // namespace quartet
