#pragma once

#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "quartet/geom.hpp"

namespace quartet {

inline constexpr int kGeneratorSlots = 3;
inline constexpr int kGeneratorWidth = 4 * kGeneratorSlots;
using FlatGenerators = Eigen::Matrix<double, kGeneratorWidth, 1>;

// Up to three reflection generators. Active planes come first and are
// pairwise distinct; the remaining slots are inactive and serialize as
// (0, 0, 0, 0).
class GeneratorSet {
 public:
  GeneratorSet() = default;
  explicit GeneratorSet(std::vector<ReflectionPlane> active);

  std::span<const ReflectionPlane> active() const { return planes_; }
  int active_count() const { return static_cast<int>(planes_.size()); }
  bool empty() const { return planes_.empty(); }

  FlatGenerators flatten() const;

  // Strict decoding of a 12-value block: each slot is either all zeros or a
  // unit normal (within 1e-6) followed by an offset. Throws kPrecondition.
  static GeneratorSet from_flat(std::span<const double> values);

 private:
  std::vector<ReflectionPlane> planes_;
};

struct GroupOptions {
  std::size_t max_order = 128;
  // Dihedral angles within this many radians of pi/k, k in [2, 36], are
  // snapped onto pi/k before closure. Zero disables snapping.
  double snap_tolerance = 1.5 * std::numbers::pi / 180.0;
  // Elements closer than this in flattened 3x4 norm are the same element.
  double dedup_tolerance = 1e-6;
};

// Finite group generated by a GeneratorSet. elements[0] is the identity.
struct SymmetryGroup {
  std::vector<RigidTransform> elements;
  GeneratorSet generators;

  std::size_t order() const { return elements.size(); }
  // Point fixed by every element.
  Point3 center() const;
};

// Moves each plane the least amount needed to put every pairwise dihedral
// angle that lies within `tolerance` of some pi/k exactly onto it. Angles not
// near such a value are left alone.
GeneratorSet snap_dihedral_angles(const GeneratorSet& gens, double tolerance);

// Breadth-first closure under composition. Throws kNonTerminatingGroup once
// the element count would exceed max_order.
SymmetryGroup generate_group(const GeneratorSet& gens, const GroupOptions& options = {});

inline constexpr double kMergeRadius = 1e-6;

// Union of the images of `domain` under every group element, element-major.
// With dedup, points closer than kMergeRadius collapse to the first one.
PointCloud apply_group(const SymmetryGroup& group, const PointCloud& domain,
                       bool dedup = false);

// Keeps the first of every cluster of points within `radius` of each other.
PointCloud dedup_points(const PointCloud& cloud, double radius = kMergeRadius);

struct FundamentalDomain {
  std::vector<std::size_t> indices;
  std::size_t size() const { return indices.size(); }
};

struct DomainOptions {
  double boundary_eps = 1e-6;
  // Bound on the reconstruction Chamfer distance, measured after scaling
  // the cloud to unit radius about its centroid.
  double cover_tolerance = 0.002;
  // When false, coverage is not checked and no kNotASymmetry is raised.
  bool check_coverage = true;
};

// Selects the points of `cloud` lying in one fundamental region of the group:
// the Dirichlet cell of a generic reference point, i.e. the intersection of
// the half-spaces on the reference side of every bisector between the
// reference point and its images. For pure reflection groups these bisectors
// are the mirror planes and the cell is the half-space n . x >= d - eps of
// each active generator wherever that is consistent.
FundamentalDomain extract_fundamental_domain(const SymmetryGroup& group, const PointCloud& cloud,
                                             const DomainOptions& options = {});
FundamentalDomain extract_fundamental_domain(const GeneratorSet& gens, const PointCloud& cloud,
                                             const DomainOptions& options = {},
                                             const GroupOptions& group_options = {});

PointCloud select(const PointCloud& cloud, const FundamentalDomain& domain);

struct SymmetryCheck {
  double residual = 0;
  bool ok = false;
};

// Chamfer distance between the cloud and the reconstruction from its
// fundamental domain. Propagates group-generation errors.
SymmetryCheck validate_symmetry(const PointCloud& cloud, const GeneratorSet& gens, double tol,
                                const GroupOptions& group_options = {},
                                double boundary_eps = 1e-6);
SymmetryCheck validate_symmetry(const PointCloud& cloud, const SymmetryGroup& group, double tol,
                                double boundary_eps = 1e-6);

}  // namespace quartet
