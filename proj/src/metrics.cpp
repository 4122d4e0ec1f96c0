#include "quartet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "quartet/error.hpp"
#include "quartet/parallel.hpp"
#include "quartet/spatial.hpp"

namespace quartet {

std::string_view metric_name(MetricKind kind) {
  return kind == MetricKind::kChamfer ? "cd" : "emd";
}

MetricKind parse_metric(std::string_view name) {
  if (name == "cd") return MetricKind::kChamfer;
  if (name == "emd") return MetricKind::kEarthMovers;
  throw Error(ErrorCode::kConfig, "unknown metric '" + std::string(name) + "' (expected cd|emd)");
}

double sdi_scale_factor(MetricKind kind) { return kind == MetricKind::kChamfer ? 10.0 : 1e3; }

namespace {

double mean_nearest_squared(const PointCloud& from, const KdTree& to) {
  double sum = 0;
  for (const auto& p : from.points) sum += to.nearest(p).squared_distance;
  return sum / static_cast<double>(from.size());
}

}  // namespace

double chamfer(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::kPrecondition, "chamfer of an empty cloud");
  const KdTree tree_a(a.points), tree_b(b.points);
  return mean_nearest_squared(a, tree_b) + mean_nearest_squared(b, tree_a);
}

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != cost.rows()) {
    throw Error(ErrorCode::kSizeMismatch, "assignment needs a square cost matrix");
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Potentials u (rows), v (columns); column 0 is a virtual start column.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), min_slack(n + 1);
  std::vector<int> row_of(n + 1, 0), prev(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    row_of[0] = i;
    int col = 0;
    std::fill(min_slack.begin(), min_slack.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[col] = 1;
      const int row = row_of[col];
      double delta = kInf;
      int next_col = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double slack = cost(row - 1, j - 1) - u[row] - v[j];
        if (slack < min_slack[j]) {
          min_slack[j] = slack;
          prev[j] = col;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          next_col = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[row_of[j]] += delta;
          v[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      col = next_col;
    } while (row_of[col] != 0);
    do {
      const int back = prev[col];
      row_of[col] = row_of[back];
      col = back;
    } while (col != 0);
  }
  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= n; ++j) assignment[row_of[j] - 1] = j - 1;
  return assignment;
}

std::vector<int> auction_assignment(const Eigen::MatrixXd& cost, double eps_final) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != cost.rows()) {
    throw Error(ErrorCode::kSizeMismatch, "assignment needs a square cost matrix");
  }
  std::vector<double> price(n, 0.0);
  std::vector<int> owner(n, -1), assigned(n, -1);
  double eps = std::max(cost.maxCoeff() - cost.minCoeff(), eps_final) / 4.0;
  for (;;) {
    std::fill(owner.begin(), owner.end(), -1);
    std::fill(assigned.begin(), assigned.end(), -1);
    std::vector<int> unassigned(n);
    for (int i = 0; i < n; ++i) unassigned[i] = n - 1 - i;
    while (!unassigned.empty()) {
      const int person = unassigned.back();
      unassigned.pop_back();
      // Benefit is -cost; find the best and second-best net values.
      double best = -std::numeric_limits<double>::infinity(), second = best;
      int best_j = 0;
      for (int j = 0; j < n; ++j) {
        const double value = -cost(person, j) - price[j];
        if (value > best) {
          second = best;
          best = value;
          best_j = j;
        } else if (value > second) {
          second = value;
        }
      }
      const double increment = (n > 1 ? best - second : 0.0) + eps;
      price[best_j] += increment;
      if (owner[best_j] >= 0) {
        assigned[owner[best_j]] = -1;
        unassigned.push_back(owner[best_j]);
      }
      owner[best_j] = person;
      assigned[person] = best_j;
    }
    if (eps <= eps_final) break;
    eps = std::max(eps / 5.0, eps_final);
  }
  return assigned;
}

double emd(const PointCloud& a, const PointCloud& b, const EmdOptions& options) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::kPrecondition, "emd of an empty cloud");
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kSizeMismatch, "emd needs equal point counts (" +
                                              std::to_string(a.size()) + " vs " +
                                              std::to_string(b.size()) + "); resample first");
  }
  const std::size_t n = a.size();
  if (n > options.exact_cap && !options.approximate) {
    throw Error(ErrorCode::kSolverCap, "emd point count " + std::to_string(n) +
                                           " exceeds the exact solver cap " +
                                           std::to_string(options.exact_cap) +
                                           "; enable the approximate flag");
  }
  Eigen::MatrixXd cost(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) cost(i, j) = (a.points[i] - b.points[j]).norm();
  }
  const std::vector<int> match =
      n > options.exact_cap ? auction_assignment(cost) : solve_assignment(cost);
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) total += cost(i, match[i]);
  return total / static_cast<double>(n);
}

double distance(const PointCloud& a, const PointCloud& b, MetricKind kind,
                const EmdOptions& emd_options) {
  return kind == MetricKind::kChamfer ? chamfer(a, b) : emd(a, b, emd_options);
}

namespace {

PointCloud strip_labels(PointCloud c) {
  c.labels.clear();
  return c;
}

// `gens_normalized[j]` act on part j of the already normalized shape.
EvalReport sdi_normalized(const PointCloud& normalized,
                          const std::vector<GeneratorSet>& gens_normalized, MetricKind kind,
                          const SdiOptions& options) {
  const int parts = normalized.part_count();
  DomainOptions domain_options;
  domain_options.boundary_eps = options.boundary_eps;
  domain_options.check_coverage = false;

  PointCloud reconstruction;
  for (int j = 0; j < parts; ++j) {
    const PointCloud part = normalized.part(j);
    const SymmetryGroup group = generate_group(gens_normalized[j], options.group);
    const FundamentalDomain domain = extract_fundamental_domain(group, part, domain_options);
    const PointCloud rebuilt = apply_group(group, select(part, domain));
    reconstruction.points.insert(reconstruction.points.end(), rebuilt.points.begin(),
                                 rebuilt.points.end());
  }
  if (reconstruction.empty()) {
    throw Error(ErrorCode::kNotASymmetry, "fundamental domain is empty for every part");
  }
  if (kind == MetricKind::kEarthMovers) {
    reconstruction = dedup_points(reconstruction);
    Rng rng(options.seed);
    reconstruction = resample_part(reconstruction, normalized.size(), rng);
  }

  EvalReport report;
  report.kind = kind;
  report.raw = distance(strip_labels(normalized), reconstruction, kind, options.emd);
  report.factor = sdi_scale_factor(kind);
  report.scaled = report.raw * report.factor;
  report.normalized = true;
  return report;
}

}  // namespace

EvalReport sdi_parts(const PointCloud& shape, const std::vector<GeneratorSet>& part_gens,
                     MetricKind kind, const SdiOptions& options) {
  shape.validate();
  if (part_gens.size() != static_cast<std::size_t>(shape.part_count())) {
    throw Error(ErrorCode::kSizeMismatch, "need one generator set per part");
  }
  const auto [normalized, norm] = normalize_cloud(shape);
  std::vector<GeneratorSet> mapped;
  for (const auto& gens : part_gens) {
    std::vector<ReflectionPlane> planes;
    for (const auto& p : gens.active()) planes.push_back(norm.forward(p));
    mapped.emplace_back(std::move(planes));
  }
  return sdi_normalized(normalized, mapped, kind, options);
}

EvalReport sdi(const PointCloud& cloud, const GeneratorSet& gens, MetricKind kind,
               const SdiOptions& options) {
  return sdi_parts(strip_labels(cloud), {gens}, kind, options);
}

EvalReport sdi_default(const PointCloud& cloud, MetricKind kind, const SdiOptions& options) {
  const PointCloud single = strip_labels(cloud);
  const auto normalized = normalize_cloud(single).first;
  return sdi_normalized(normalized, {GeneratorSet({ReflectionPlane(Vector3::UnitX(), 0.0)})},
                        kind, options);
}

Eigen::MatrixXd pairwise_distances(const std::vector<PointCloud>& clouds, MetricKind kind,
                                   const EmdOptions& emd_options) {
  const std::size_t n = clouds.size();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  parallel_for(pairs.size(), [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    const double value = distance(clouds[i], clouds[j], kind, emd_options);
    d(i, j) = value;
    d(j, i) = value;
  });
  return d;
}

double one_nna_from_distances(const Eigen::MatrixXd& pooled, std::size_t generated_count) {
  const auto n = static_cast<std::size_t>(pooled.rows());
  if (n < 2 || generated_count == 0 || generated_count >= n) {
    throw Error(ErrorCode::kPrecondition, "1-NNA needs non-empty generated and reference sets");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t nearest = i;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = pooled(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (d < best) {
        best = d;
        nearest = j;
      }
    }
    if ((i < generated_count) == (nearest < generated_count)) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(n);
}

double one_nna(const std::vector<PointCloud>& generated, const std::vector<PointCloud>& reference,
               MetricKind kind, const EmdOptions& emd_options) {
  if (generated.empty() || reference.empty()) {
    throw Error(ErrorCode::kPrecondition, "1-NNA needs non-empty generated and reference sets");
  }
  std::vector<PointCloud> pooled = generated;
  pooled.insert(pooled.end(), reference.begin(), reference.end());
  return one_nna_from_distances(pairwise_distances(pooled, kind, emd_options), generated.size());
}

}  // namespace quartet
