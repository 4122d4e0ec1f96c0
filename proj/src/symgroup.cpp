#include "quartet/symgroup.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>

#include "quartet/error.hpp"
#include "quartet/metrics.hpp"

namespace quartet {

namespace {

constexpr int kMinFold = 2;
constexpr int kMaxFold = 36;

bool same_plane(const ReflectionPlane& a, const ReflectionPlane& b) {
  return (a.embedding() - b.embedding()).norm() < 1e-9;
}

// Angle between the unoriented planes, in [0, pi/2].
double dihedral_angle(const Vector3& a, const Vector3& b) {
  return std::acos(std::clamp(std::abs(a.dot(b)), 0.0, 1.0));
}

// pi/k closest to `angle`, if within tolerance.
std::optional<double> snap_target(double angle, double tolerance) {
  double best = 0, best_err = tolerance;
  bool found = false;
  for (int k = kMinFold; k <= kMaxFold; ++k) {
    const double target = std::numbers::pi / k;
    const double err = std::abs(angle - target);
    if (err <= best_err) {
      best = target;
      best_err = err;
      found = true;
    }
  }
  if (!found) return std::nullopt;
  return best;
}

// Closest point to the origin on the line where two non-parallel planes meet.
Point3 line_point(const ReflectionPlane& a, const ReflectionPlane& b) {
  const Vector3 dir = a.normal().cross(b.normal());
  Matrix3 m;
  m.row(0) = a.normal().transpose();
  m.row(1) = b.normal().transpose();
  m.row(2) = dir.transpose();
  return m.colPivHouseholderQr().solve(Vector3(a.offset(), b.offset(), 0.0));
}

}  // namespace

GeneratorSet::GeneratorSet(std::vector<ReflectionPlane> active) : planes_(std::move(active)) {
  if (planes_.size() > static_cast<std::size_t>(kGeneratorSlots)) {
    throw Error(ErrorCode::kPrecondition, "at most three reflection generators are allowed");
  }
  for (std::size_t i = 0; i < planes_.size(); ++i) {
    for (std::size_t j = i + 1; j < planes_.size(); ++j) {
      if (same_plane(planes_[i], planes_[j])) {
        throw Error(ErrorCode::kPrecondition, "generator planes must be pairwise distinct");
      }
    }
  }
}

FlatGenerators GeneratorSet::flatten() const {
  FlatGenerators flat = FlatGenerators::Zero();
  for (std::size_t i = 0; i < planes_.size(); ++i) {
    flat.segment<4>(static_cast<Eigen::Index>(4 * i)) = planes_[i].embedding();
  }
  return flat;
}

GeneratorSet GeneratorSet::from_flat(std::span<const double> values) {
  if (values.size() != static_cast<std::size_t>(kGeneratorWidth)) {
    throw Error(ErrorCode::kPrecondition, "generator block must hold 12 values");
  }
  std::vector<ReflectionPlane> planes;
  bool seen_inactive = false;
  for (int s = 0; s < kGeneratorSlots; ++s) {
    const Vector3 n(values[4 * s], values[4 * s + 1], values[4 * s + 2]);
    const double d = values[4 * s + 3];
    if (n.norm() == 0.0 && d == 0.0) {
      seen_inactive = true;
      continue;
    }
    if (seen_inactive) {
      throw Error(ErrorCode::kPrecondition, "active generator slot follows an inactive one");
    }
    if (std::abs(n.norm() - 1.0) > 1e-6) {
      throw Error(ErrorCode::kPrecondition,
                  "generator slot " + std::to_string(s) + " normal is not unit length");
    }
    planes.emplace_back(n, d);
  }
  return GeneratorSet(std::move(planes));
}

Point3 SymmetryGroup::center() const {
  Point3 sum = Point3::Zero();
  for (const auto& g : elements) sum += g.translation;
  return sum / static_cast<double>(elements.size());
}

GeneratorSet snap_dihedral_angles(const GeneratorSet& gens, double tolerance) {
  if (tolerance <= 0 || gens.active_count() < 2) return gens;
  std::vector<ReflectionPlane> planes(gens.active().begin(), gens.active().end());

  const auto parallel = [](const Vector3& a, const Vector3& b) {
    return a.cross(b).norm() < 1e-9;
  };

  // Second plane: rotate about its intersection line with the first.
  {
    const Vector3& n1 = planes[0].normal();
    const Vector3& n2 = planes[1].normal();
    if (!parallel(n1, n2)) {
      if (auto target = snap_target(dihedral_angle(n1, n2), tolerance)) {
        const double sign = n1.dot(n2) >= 0 ? 1.0 : -1.0;
        const Vector3 base = sign * n1;
        const Vector3 ortho = (n2 - n2.dot(base) * base).normalized();
        const Vector3 snapped = std::cos(*target) * base + std::sin(*target) * ortho;
        const Point3 anchor = line_point(planes[0], planes[1]);
        planes[1] = ReflectionPlane(snapped, snapped.dot(anchor));
      }
    }
  }

  // Third plane: solve for the unit normal with both snapped angles, keeping
  // the original orientation relative to the first two.
  if (planes.size() == 3) {
    const Vector3& n1 = planes[0].normal();
    const Vector3& n2 = planes[1].normal();
    const Vector3& n3 = planes[2].normal();
    if (!parallel(n1, n2) && !parallel(n1, n3) && !parallel(n2, n3)) {
      const auto target_cos = [&](const Vector3& a) {
        const double angle = dihedral_angle(a, n3);
        const double snapped = snap_target(angle, tolerance).value_or(angle);
        return (a.dot(n3) >= 0 ? 1.0 : -1.0) * std::cos(snapped);
      };
      const double a = target_cos(n1);
      const double b = target_cos(n2);
      const double c = n1.dot(n2);
      const double det = 1.0 - c * c;
      const double alpha = (a - c * b) / det;
      const double beta = (b - c * a) / det;
      const Vector3 in_span = alpha * n1 + beta * n2;
      const double rest = 1.0 - in_span.squaredNorm();
      const Vector3 m = n1.cross(n2).normalized();
      if (rest >= -1e-12) {
        const double gamma = std::sqrt(std::max(0.0, rest)) * (n3.dot(m) >= 0 ? 1.0 : -1.0);
        const Vector3 snapped = in_span + gamma * m;
        Matrix3 normals;
        normals.row(0) = n1.transpose();
        normals.row(1) = n2.transpose();
        normals.row(2) = n3.transpose();
        Point3 anchor;
        if (std::abs(normals.determinant()) > 1e-6) {
          anchor = normals.colPivHouseholderQr().solve(
              Vector3(planes[0].offset(), planes[1].offset(), planes[2].offset()));
        } else {
          // Coplanar normals: a finite group needs all three planes to share
          // the first two planes' common line.
          anchor = line_point(planes[0], planes[1]);
        }
        planes[2] = ReflectionPlane(snapped, snapped.dot(anchor));
      }
    }
  }

  for (std::size_t i = 0; i < planes.size(); ++i) {
    for (std::size_t j = i + 1; j < planes.size(); ++j) {
      if (same_plane(planes[i], planes[j])) return gens;
    }
  }
  return GeneratorSet(std::move(planes));
}

SymmetryGroup generate_group(const GeneratorSet& gens, const GroupOptions& options) {
  if (options.max_order < 1) throw Error(ErrorCode::kPrecondition, "max_order must be >= 1");
  SymmetryGroup group;
  group.generators = snap_dihedral_angles(gens, options.snap_tolerance);

  std::vector<RigidTransform> generators;
  for (const auto& plane : group.generators.active()) {
    generators.push_back(reflection_to_transform(plane));
  }

  group.elements.push_back(RigidTransform::identity());
  for (std::size_t next = 0; next < group.elements.size(); ++next) {
    for (const auto& g : generators) {
      const RigidTransform candidate = compose(g, group.elements[next]);
      const bool known = std::any_of(
          group.elements.begin(), group.elements.end(), [&](const RigidTransform& e) {
            return transform_distance(e, candidate) < options.dedup_tolerance;
          });
      if (known) continue;
      if (group.elements.size() >= options.max_order) {
        throw Error(ErrorCode::kNonTerminatingGroup,
                    "group closure exceeds max order " + std::to_string(options.max_order));
      }
      group.elements.push_back(candidate);
    }
  }
  return group;
}

PointCloud dedup_points(const PointCloud& cloud, double radius) {
  struct KeyHash {
    std::size_t operator()(const std::array<std::int64_t, 3>& k) const {
      std::size_t h = 1469598103934665603ULL;
      for (auto v : k) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ULL;
      return h;
    }
  };
  const auto key = [radius](const Point3& p) {
    return std::array<std::int64_t, 3>{static_cast<std::int64_t>(std::floor(p.x() / radius)),
                                       static_cast<std::int64_t>(std::floor(p.y() / radius)),
                                       static_cast<std::int64_t>(std::floor(p.z() / radius))};
  };
  std::unordered_map<std::array<std::int64_t, 3>, std::vector<std::size_t>, KeyHash> cells;
  PointCloud out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    const auto k = key(p);
    bool duplicate = false;
    for (int dx = -1; dx <= 1 && !duplicate; ++dx) {
      for (int dy = -1; dy <= 1 && !duplicate; ++dy) {
        for (int dz = -1; dz <= 1 && !duplicate; ++dz) {
          auto it = cells.find({k[0] + dx, k[1] + dy, k[2] + dz});
          if (it == cells.end()) continue;
          for (std::size_t j : it->second) {
            if ((out.points[j] - p).norm() < radius) {
              duplicate = true;
              break;
            }
          }
        }
      }
    }
    if (duplicate) continue;
    cells[k].push_back(out.points.size());
    out.points.push_back(p);
    if (cloud.has_labels()) out.labels.push_back(cloud.labels[i]);
  }
  return out;
}

PointCloud apply_group(const SymmetryGroup& group, const PointCloud& domain, bool dedup) {
  PointCloud out;
  out.points.reserve(domain.size() * group.order());
  for (const auto& g : group.elements) {
    for (std::size_t i = 0; i < domain.size(); ++i) {
      out.points.push_back(g.apply(domain.points[i]));
      if (domain.has_labels()) out.labels.push_back(domain.labels[i]);
    }
  }
  return dedup ? dedup_points(out) : out;
}

namespace {

// Deterministic, roughly uniform directions on the sphere.
const std::vector<Vector3>& candidate_directions() {
  static const std::vector<Vector3> dirs = [] {
    constexpr int kCount = 512;
    std::vector<Vector3> out;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < kCount; ++i) {
      const double z = 1.0 - (2.0 * i + 1.0) / kCount;
      const double r = std::sqrt(1.0 - z * z);
      const double phi = golden * i + 0.1234;
      out.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
    }
    return out;
  }();
  return dirs;
}

// Unit direction (relative to the group center) whose orbit is as spread out
// as possible, preferring directions on the positive side of every active
// generator.
Vector3 reference_direction(const SymmetryGroup& group) {
  const auto genericity = [&](const Vector3& u) {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t e = 1; e < group.order(); ++e) {
      worst = std::min(worst, (group.elements[e].linear * u - u).norm());
    }
    return worst;
  };
  const auto positive_side = [&](const Vector3& u) {
    return std::all_of(group.generators.active().begin(), group.generators.active().end(),
                       [&](const ReflectionPlane& p) { return p.normal().dot(u) > 0; });
  };
  Vector3 best = candidate_directions().front();
  double best_score = -1;
  for (int pass = 0; pass < 2 && best_score < 0; ++pass) {
    for (const auto& u : candidate_directions()) {
      if (pass == 0 && !positive_side(u)) continue;
      const double score = genericity(u);
      if (score > best_score + 1e-12) {
        best = u;
        best_score = score;
      }
    }
  }
  return best;
}

}  // namespace

FundamentalDomain extract_fundamental_domain(const SymmetryGroup& group, const PointCloud& cloud,
                                             const DomainOptions& options) {
  cloud.validate();
  FundamentalDomain domain;
  if (group.order() <= 1) {
    domain.indices.resize(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) domain.indices[i] = i;
    return domain;
  }

  const Point3 center = group.center();
  const Vector3 u = reference_direction(group);
  // Bisector between u and each image g(u): keep x with (x - c) . w <= eps.
  std::vector<Vector3> walls;
  for (std::size_t e = 1; e < group.order(); ++e) {
    const Vector3 diff = group.elements[e].linear * u - u;
    const double len = diff.norm();
    if (len > 1e-9) walls.push_back(diff / len);
  }
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vector3 rel = cloud.points[i] - center;
    const bool inside = std::all_of(walls.begin(), walls.end(), [&](const Vector3& w) {
      return rel.dot(w) <= options.boundary_eps;
    });
    if (inside) domain.indices.push_back(i);
  }

  if (options.check_coverage) {
    if (domain.indices.empty()) {
      throw Error(ErrorCode::kNotASymmetry, "not a symmetry of this cloud: empty domain");
    }
    const Point3 centroid = cloud.centroid();
    double radius2 = 0;
    for (const auto& p : cloud.points) radius2 = std::max(radius2, (p - centroid).squaredNorm());
    double residual = chamfer(cloud, apply_group(group, select(cloud, domain)));
    if (radius2 > 0) residual /= radius2;
    if (residual > options.cover_tolerance) {
      throw Error(ErrorCode::kNotASymmetry,
                  "not a symmetry of this cloud: coverage residual " + std::to_string(residual));
    }
  }
  return domain;
}

FundamentalDomain extract_fundamental_domain(const GeneratorSet& gens, const PointCloud& cloud,
                                             const DomainOptions& options,
                                             const GroupOptions& group_options) {
  return extract_fundamental_domain(generate_group(gens, group_options), cloud, options);
}

PointCloud select(const PointCloud& cloud, const FundamentalDomain& domain) {
  PointCloud out;
  out.points.reserve(domain.size());
  for (std::size_t i : domain.indices) {
    out.points.push_back(cloud.points.at(i));
    if (cloud.has_labels()) out.labels.push_back(cloud.labels[i]);
  }
  return out;
}

SymmetryCheck validate_symmetry(const PointCloud& cloud, const SymmetryGroup& group, double tol,
                                double boundary_eps) {
  DomainOptions options;
  options.boundary_eps = boundary_eps;
  options.check_coverage = false;
  const FundamentalDomain domain = extract_fundamental_domain(group, cloud, options);
  SymmetryCheck check;
  if (domain.indices.empty()) {
    check.residual = std::numeric_limits<double>::infinity();
  } else {
    check.residual = chamfer(cloud, apply_group(group, select(cloud, domain)));
  }
  check.ok = check.residual <= tol;
  return check;
}

SymmetryCheck validate_symmetry(const PointCloud& cloud, const GeneratorSet& gens, double tol,
                                const GroupOptions& group_options, double boundary_eps) {
  return validate_symmetry(cloud, generate_group(gens, group_options), tol, boundary_eps);
}

}  // namespace quartet
