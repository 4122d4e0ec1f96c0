#include "quartet/geom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/SVD>

#include "quartet/error.hpp"

namespace quartet {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kPrecondition: return "precondition";
    case ErrorCode::kDegenerateCloud: return "degenerate_cloud";
    case ErrorCode::kTranslationResult: return "translation_result";
    case ErrorCode::kNonTerminatingGroup: return "non_terminating_group";
    case ErrorCode::kNotASymmetry: return "not_a_symmetry";
    case ErrorCode::kScoreUndefined: return "score_undefined";
    case ErrorCode::kSizeMismatch: return "size_mismatch";
    case ErrorCode::kSolverCap: return "solver_cap";
    case ErrorCode::kDegenerateFit: return "degenerate_fit";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

int PointCloud::part_count() const {
  if (labels.empty()) return points.empty() ? 0 : 1;
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

std::vector<std::size_t> PointCloud::part_indices(int j) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (labels.empty() ? j == 0 : labels[i] == j) idx.push_back(i);
  }
  return idx;
}

PointCloud PointCloud::part(int j) const {
  PointCloud out;
  for (std::size_t i : part_indices(j)) out.points.push_back(points[i]);
  return out;
}

Point3 PointCloud::centroid() const {
  Point3 sum = Point3::Zero();
  for (const auto& p : points) sum += p;
  return sum / static_cast<double>(points.size());
}

void PointCloud::validate() const {
  if (points.empty()) throw Error(ErrorCode::kPrecondition, "point cloud is empty");
  for (const auto& p : points) {
    if (!p.allFinite()) throw Error(ErrorCode::kPrecondition, "non-finite coordinate");
  }
  if (labels.empty()) return;
  if (labels.size() != points.size()) {
    throw Error(ErrorCode::kPrecondition, "label count does not match point count");
  }
  const int parts = part_count();
  std::vector<bool> seen(static_cast<std::size_t>(parts), false);
  for (int l : labels) {
    if (l < 0) throw Error(ErrorCode::kPrecondition, "negative part label");
    seen[static_cast<std::size_t>(l)] = true;
  }
  if (!std::all_of(seen.begin(), seen.end(), [](bool s) { return s; })) {
    throw Error(ErrorCode::kPrecondition, "part labels are not contiguous from 0");
  }
}

std::pair<Vector3, double> canonicalize_plane(const Vector3& normal, double offset) {
  for (int i = 0; i < 3; ++i) {
    if (std::abs(normal[i]) > 1e-12) {
      if (normal[i] < 0) return {-normal, -offset};
      break;
    }
  }
  return {normal, offset};
}

ReflectionPlane::ReflectionPlane(const Vector3& normal, double offset) {
  const double len = normal.norm();
  if (!(len > 0) || !std::isfinite(len) || !std::isfinite(offset)) {
    throw Error(ErrorCode::kPrecondition, "reflection plane needs a finite nonzero normal");
  }
  // Re-dividing an already unit normal can flip low bits; leaving it alone
  // keeps serialized planes bit-stable across a decode/encode cycle.
  if (std::abs(len - 1.0) <= 4 * std::numeric_limits<double>::epsilon()) {
    std::tie(normal_, offset_) = canonicalize_plane(normal, offset);
  } else {
    std::tie(normal_, offset_) = canonicalize_plane(normal / len, offset / len);
  }
}

Vector4 ReflectionPlane::embedding(double offset_weight) const {
  return {normal_.x(), normal_.y(), normal_.z(), offset_weight * offset_};
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.linear = linear.transpose();
  inv.translation = -(inv.linear * translation);
  return inv;
}

bool RigidTransform::is_orthogonal(double tol) const {
  return ((linear.transpose() * linear) - Matrix3::Identity()).cwiseAbs().maxCoeff() <= tol;
}

RigidTransform RigidTransform::reorthonormalized() const {
  Eigen::JacobiSVD<Matrix3> svd(linear, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return {svd.matrixU() * svd.matrixV().transpose(), translation};
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out{a.linear * b.linear, a.linear * b.translation + a.translation};
  if (!out.is_orthogonal(1e-12)) out = out.reorthonormalized();
  return out;
}

double transform_distance(const RigidTransform& a, const RigidTransform& b) {
  return std::sqrt((a.linear - b.linear).squaredNorm() +
                   (a.translation - b.translation).squaredNorm());
}

Point3 reflect_point(const ReflectionPlane& plane, const Point3& p) {
  return p - 2.0 * plane.signed_distance(p) * plane.normal();
}

RigidTransform reflection_to_transform(const ReflectionPlane& plane) {
  const Vector3& n = plane.normal();
  return {Matrix3::Identity() - 2.0 * n * n.transpose(), 2.0 * plane.offset() * n};
}

RigidTransform rotation_from_reflections(const ReflectionPlane& first,
                                         const ReflectionPlane& second) {
  const double cosine = first.normal().dot(second.normal());
  if (1.0 - std::abs(cosine) < 1e-12) {
    const double aligned = cosine > 0 ? second.offset() : -second.offset();
    if (std::abs(first.offset() - aligned) > 1e-9) {
      throw Error(ErrorCode::kTranslationResult,
                  "parallel distinct planes compose to a translation");
    }
    return RigidTransform::identity();
  }
  return compose(reflection_to_transform(second), reflection_to_transform(first));
}

ReflectionPlane Normalization::forward(const ReflectionPlane& plane) const {
  return {plane.normal(), (plane.offset() - plane.normal().dot(center)) / scale};
}

ReflectionPlane Normalization::inverse(const ReflectionPlane& plane) const {
  return {plane.normal(), plane.offset() * scale + plane.normal().dot(center)};
}

std::pair<PointCloud, Normalization> normalize_cloud(const PointCloud& cloud) {
  cloud.validate();
  Normalization norm;
  norm.center = cloud.centroid();
  double radius = 0;
  for (const auto& p : cloud.points) radius = std::max(radius, (p - norm.center).norm());
  if (radius <= 1e-12 * std::max(1.0, norm.center.norm())) {
    throw Error(ErrorCode::kDegenerateCloud, "all points coincide");
  }
  norm.scale = radius;
  PointCloud out = cloud;
  for (auto& p : out.points) p = norm.forward(p);
  return {std::move(out), norm};
}

PointCloud apply_inverse(const Normalization& norm, const PointCloud& cloud) {
  PointCloud out = cloud;
  for (auto& p : out.points) p = norm.inverse(p);
  return out;
}

PointCloud resample_part(const PointCloud& cloud, std::size_t target_n, Rng& rng) {
  if (cloud.empty()) throw Error(ErrorCode::kPrecondition, "cannot resample an empty cloud");
  if (target_n == 0) throw Error(ErrorCode::kPrecondition, "target point count must be >= 1");
  const std::size_t n = cloud.size();
  std::vector<std::size_t> picked;
  picked.reserve(target_n);
  if (target_n <= n) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    // Partial Fisher-Yates: the first target_n slots are a uniform subset.
    for (std::size_t i = 0; i < target_n; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(all[i], all[pick(rng)]);
    }
    picked.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(target_n));
    std::sort(picked.begin(), picked.end());
  } else {
    picked.resize(n);
    std::iota(picked.begin(), picked.end(), std::size_t{0});
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    while (picked.size() < target_n) picked.push_back(pick(rng));
  }
  PointCloud out;
  out.points.reserve(target_n);
  for (std::size_t i : picked) {
    out.points.push_back(cloud.points[i]);
    if (cloud.has_labels()) out.labels.push_back(cloud.labels[i]);
  }
  return out;
}

}  // namespace quartet
