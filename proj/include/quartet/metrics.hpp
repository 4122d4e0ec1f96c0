#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "quartet/geom.hpp"
#include "quartet/symgroup.hpp"

namespace quartet {

enum class MetricKind { kChamfer, kEarthMovers };

std::string_view metric_name(MetricKind kind);  // "cd" / "emd"
MetricKind parse_metric(std::string_view name);

// Reporting factor for SDI: 10 for CD, 1e3 for EMD.
double sdi_scale_factor(MetricKind kind);

inline constexpr std::string_view kChamferVariant = "symmetric-mean-squared-nn";

struct EvalReport {
  MetricKind kind = MetricKind::kChamfer;
  double raw = 0;
  double scaled = 0;
  double factor = 1;
  bool normalized = true;
};

// Mean squared nearest-neighbour distance from a to b plus the same from b
// to a. Exact.
double chamfer(const PointCloud& a, const PointCloud& b);

struct EmdOptions {
  std::size_t exact_cap = 1024;
  // Above the cap, use the epsilon-scaling auction instead of failing.
  bool approximate = false;
};

// Minimum over bijections of the mean Euclidean distance between matched
// points. Throws kSizeMismatch for unequal sizes and kSolverCap above the
// exact-solver cap unless approximation is enabled.
double emd(const PointCloud& a, const PointCloud& b, const EmdOptions& options = {});

// Exact minimum-cost perfect matching on a square cost matrix by successive
// shortest augmenting paths. Returns the column assigned to each row.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

// Epsilon-scaling forward auction; the matching cost is within n * eps_final
// of optimal.
std::vector<int> auction_assignment(const Eigen::MatrixXd& cost, double eps_final = 1e-7);

double distance(const PointCloud& a, const PointCloud& b, MetricKind kind,
                const EmdOptions& emd_options = {});

struct SdiOptions {
  std::uint64_t seed = 0;
  EmdOptions emd;
  GroupOptions group;
  double boundary_eps = 1e-6;
};

// Distance between the normalized cloud and its reconstruction from the
// fundamental domain under the group generated by `gens`. The generators are
// expressed in the cloud's own frame.
EvalReport sdi(const PointCloud& cloud, const GeneratorSet& gens, MetricKind kind,
               const SdiOptions& options = {});

// Per-part variant: part j of the labeled shape uses part_gens[j]; the
// reconstruction is the union of the per-part reconstructions.
EvalReport sdi_parts(const PointCloud& shape, const std::vector<GeneratorSet>& part_gens,
                     MetricKind kind, const SdiOptions& options = {});

// SDI under the mirror x = 0 of the normalized cloud.
EvalReport sdi_default(const PointCloud& cloud, MetricKind kind, const SdiOptions& options = {});

Eigen::MatrixXd pairwise_distances(const std::vector<PointCloud>& clouds, MetricKind kind,
                                   const EmdOptions& emd_options = {});

// Leave-one-out 1-nearest-neighbour accuracy over the pooled sets, percent.
double one_nna(const std::vector<PointCloud>& generated, const std::vector<PointCloud>& reference,
               MetricKind kind, const EmdOptions& emd_options = {});
double one_nna_from_distances(const Eigen::MatrixXd& pooled, std::size_t generated_count);

}  // namespace quartet
