#include "quartet/detect.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "quartet/error.hpp"
#include "quartet/parallel.hpp"
#include "quartet/spatial.hpp"

namespace quartet {

namespace {

constexpr std::size_t kVoteChunk = 4096;
// Refined modes closer than this describe the same mirror.
constexpr double kRefinedMergeRadius = 1e-3;

// Uniform hash grid over the 4-d reflection space. Queries visit the 3^4
// cells around a point, so they see everything within one cell width.
class VoteGrid {
 public:
  using Key = std::array<std::int64_t, 4>;

  explicit VoteGrid(double cell) : cell_(cell) {}
  VoteGrid(const std::vector<Vector4>& points, double cell) : cell_(cell) {
    for (std::size_t i = 0; i < points.size(); ++i) insert(i, points[i]);
  }

  void insert(std::size_t index, const Vector4& v) { cells_[key(v)].push_back(index); }

  Key key(const Vector4& v) const {
    return {static_cast<std::int64_t>(std::floor(v[0] / cell_)),
            static_cast<std::int64_t>(std::floor(v[1] / cell_)),
            static_cast<std::int64_t>(std::floor(v[2] / cell_)),
            static_cast<std::int64_t>(std::floor(v[3] / cell_))};
  }

  template <typename Visit>
  void for_each_near(const Vector4& s, Visit&& visit) const {
    const Key center = key(s);
    Key k;
    for (int a = -1; a <= 1; ++a) {
      k[0] = center[0] + a;
      for (int b = -1; b <= 1; ++b) {
        k[1] = center[1] + b;
        for (int c = -1; c <= 1; ++c) {
          k[2] = center[2] + c;
          for (int d = -1; d <= 1; ++d) {
            k[3] = center[3] + d;
            auto it = cells_.find(k);
            if (it == cells_.end()) continue;
            for (std::size_t i : it->second) visit(i);
          }
        }
      }
    }
  }

 private:
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::size_t h = 1469598103934665603ULL;
      for (auto v : k) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ULL;
      return h;
    }
  };

  double cell_;
  std::unordered_map<Key, std::vector<std::size_t>, KeyHash> cells_;
};

// Entries gathered from the cells around one grid cell. An ascent moves
// slowly, so the list is rebuilt only when it enters a new cell.
struct Neighbourhood {
  VoteGrid::Key key{};
  bool valid = false;
  std::vector<Vector4> points;
};

struct WeightedMean {
  Vector4 mean = Vector4::Zero();
  double weight = 0;
};

// Kernel-weighted mean of the neighbourhood of s. Weights are taken relative
// to the nearest neighbour so that far-off points do not underflow to an
// empty sum.
WeightedMean kernel_mean(const Vector4& s, const ReflectionDb& db, const DensityParams& params,
                         const VoteGrid* grid, Neighbourhood& cache) {
  const std::vector<Vector4>* candidates = &db.entries;
  if (grid) {
    const VoteGrid::Key k = grid->key(s);
    if (!cache.valid || cache.key != k) {
      cache.points.clear();
      grid->for_each_near(s, [&](std::size_t i) { cache.points.push_back(db.entries[i]); });
      cache.key = k;
      cache.valid = true;
    }
    candidates = &cache.points;
  }
  const double inv2h2 = 1.0 / (2.0 * params.bandwidth * params.bandwidth);
  const double r2 = params.radius * params.radius;
  thread_local std::vector<double> dist2;
  dist2.resize(candidates->size());
  double min_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates->size(); ++i) {
    dist2[i] = ((*candidates)[i] - s).squaredNorm();
    if (dist2[i] <= r2) min_d2 = std::min(min_d2, dist2[i]);
  }
  WeightedMean out;
  if (!std::isfinite(min_d2)) return out;
  for (std::size_t i = 0; i < candidates->size(); ++i) {
    if (dist2[i] > r2) continue;
    const double w = std::exp(-(dist2[i] - min_d2) * inv2h2);
    out.mean += w * (*candidates)[i];
    out.weight += w;
  }
  out.mean /= out.weight;
  return out;
}

Vector4 ascend(const Vector4& start, const ReflectionDb& db, const DensityParams& params,
               const VoteGrid* grid, int max_iter, double tol) {
  Neighbourhood cache;
  Vector4 s = start;
  for (int it = 0; it < max_iter; ++it) {
    const WeightedMean m = kernel_mean(s, db, params, grid, cache);
    if (m.weight == 0) break;
    const double step = (m.mean - s).norm();
    s = m.mean;
    if (step < tol) break;
  }
  return s;
}
ReflectionPlane plane_from_location(const Vector4& v) {
  const Vector3 n = v.head<3>();
  if (n.norm() < 1e-12) return ReflectionPlane(Vector3::UnitX(), 0.0);
  return ReflectionPlane(n, v[3]);
}

}  // namespace

ReflectionDb vote_pairs(const PointCloud& cloud, std::size_t budget, Rng& rng) {
  if (cloud.size() < 2) throw Error(ErrorCode::kPrecondition, "voting needs at least two points");
  if (budget < 1) throw Error(ErrorCode::kPrecondition, "vote budget must be >= 1");
  const std::size_t n = cloud.size();
  const auto vote = [&](std::size_t i, std::size_t j) -> std::optional<Vector4> {
    const Vector3 diff = cloud.points[i] - cloud.points[j];
    const double len = diff.norm();
    if (len < 1e-9) return std::nullopt;
    const Vector3 normal = diff / len;
    const Point3 mid = 0.5 * (cloud.points[i] + cloud.points[j]);
    return ReflectionPlane(normal, normal.dot(mid)).embedding();
  };

  ReflectionDb db;
  const std::size_t all_pairs = n * (n - 1) / 2;
  if (budget >= all_pairs) {
    db.entries.reserve(all_pairs);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (auto v = vote(i, j)) db.entries.push_back(*v);
      }
    }
    return db;
  }

  const std::uint64_t root = rng();
  const std::size_t chunks = (budget + kVoteChunk - 1) / kVoteChunk;
  std::vector<std::vector<Vector4>> partial(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    Rng local = make_rng(root, c);
    std::uniform_int_distribution<std::size_t> first(0, n - 1), second(0, n - 2);
    const std::size_t count = std::min(kVoteChunk, budget - c * kVoteChunk);
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t i = first(local);
      std::size_t j = second(local);
      if (j >= i) ++j;
      if (auto v = vote(i, j)) partial[c].push_back(*v);
    }
  });
  for (auto& part : partial) db.entries.insert(db.entries.end(), part.begin(), part.end());
  return db;
}

double reflection_distance(const ReflectionPlane& a, const ReflectionPlane& b,
                           double offset_weight) {
  const Vector4 ea = a.embedding(offset_weight), eb = b.embedding(offset_weight);
  return std::min((ea - eb).norm(), (ea + eb).norm());
}

double density(const Vector4& s, const ReflectionDb& db, const DensityParams& params) {
  if (!(params.bandwidth > 0)) throw Error(ErrorCode::kPrecondition, "bandwidth must be > 0");
  const double inv2h2 = 1.0 / (2.0 * params.bandwidth * params.bandwidth);
  double sum = 0;
  for (const auto& r : db.entries) {
    const double d2 = (s - r).squaredNorm();
    if (d2 <= params.radius * params.radius) sum += std::exp(-d2 * inv2h2);
  }
  return sum;
}

Vector4 mean_shift(const Vector4& start, const ReflectionDb& db, const DensityParams& params,
                   int max_iter, double tol) {
  if (db.empty()) throw Error(ErrorCode::kPrecondition, "mean shift needs a non-empty db");
  if (!(params.bandwidth > 0)) throw Error(ErrorCode::kPrecondition, "bandwidth must be > 0");
  return ascend(start, db, params, nullptr, max_iter, tol);
}

std::vector<Mode> cluster_modes(const ReflectionDb& db, const DensityParams& params,
                                const ClusterOptions& options) {
  if (db.empty()) throw Error(ErrorCode::kPrecondition, "clustering needs a non-empty db");
  if (!(params.bandwidth > 0)) throw Error(ErrorCode::kPrecondition, "bandwidth must be > 0");
  std::optional<VoteGrid> grid;
  if (std::isfinite(params.radius)) grid.emplace(db.entries, params.radius);
  const VoteGrid* grid_ptr = grid ? &*grid : nullptr;

  // Ascents run in entry order. Every point an ascent visits is recorded
  // with the end point it reached; a later ascent that comes within
  // snap_radius of a recorded point stops and takes that end point over.
  const double seed_tol = std::max(options.tol, options.seed_tol);
  const bool snapping = options.snap_radius > 0;
  const double snap2 = options.snap_radius * options.snap_radius;
  VoteGrid visited(snapping ? options.snap_radius : 1.0);
  std::vector<Vector4> trail_points;
  std::vector<std::size_t> trail_end;
  std::vector<Vector4> ends(db.size());
  std::vector<Vector4> path;
  for (std::size_t i = 0; i < db.size(); ++i) {
    Vector4 s = db.entries[i];
    std::optional<std::size_t> snapped;
    Neighbourhood cache;
    path.clear();
    for (int it = 0; it < options.max_iter; ++it) {
      if (snapping) {
        visited.for_each_near(s, [&](std::size_t j) {
          if (!snapped && (trail_points[j] - s).squaredNorm() <= snap2) snapped = trail_end[j];
        });
        if (snapped) break;
        path.push_back(s);
      }
      const WeightedMean m = kernel_mean(s, db, params, grid_ptr, cache);
      if (m.weight == 0) break;
      const double step = (m.mean - s).norm();
      s = m.mean;
      if (step < seed_tol) break;
    }
    ends[i] = snapped ? ends[*snapped] : s;
    if (snapping) {
      const std::size_t owner = snapped ? *snapped : i;
      for (const auto& p : path) {
        visited.insert(trail_points.size(), p);
        trail_points.push_back(p);
        trail_end.push_back(owner);
      }
    }
  }

  struct Cluster {
    Vector4 location;
    std::size_t count;
  };
  std::vector<Cluster> clusters;
  for (const auto& e : ends) {
    auto it = std::find_if(clusters.begin(), clusters.end(), [&](const Cluster& c) {
      return (c.location - e).norm() < options.merge_radius;
    });
    if (it == clusters.end()) {
      clusters.push_back({e, 1});
    } else {
      ++it->count;
    }
  }

  // Polishing can bring seeds that stopped early onto the same mode, so the
  // polished points are merged once more.
  std::vector<Cluster> polished;
  for (const auto& c : clusters) {
    const Vector4 p = ascend(c.location, db, params, grid_ptr, options.max_iter, options.tol);
    auto it = std::find_if(polished.begin(), polished.end(), [&](const Cluster& q) {
      return (q.location - p).norm() < options.merge_radius;
    });
    if (it == polished.end()) {
      polished.push_back({p, c.count});
    } else {
      it->count += c.count;
    }
  }

  std::vector<Mode> modes;
  modes.reserve(polished.size());
  for (const auto& c : polished) {
    modes.push_back({plane_from_location(c.location), c.location,
                     static_cast<double>(c.count) / static_cast<double>(db.size())});
  }
  std::stable_sort(modes.begin(), modes.end(),
                   [](const Mode& a, const Mode& b) { return a.mass > b.mass; });
  return modes;
}

ReflectionPlane refine_plane(const PointCloud& cloud, const ReflectionPlane& plane,
                             int iterations) {
  if (cloud.size() < 2) throw Error(ErrorCode::kPrecondition, "refinement needs two points");
  const KdTree tree(cloud.points);
  ReflectionPlane current = plane;
  std::vector<std::pair<std::size_t, double>> matches(cloud.size());
  std::vector<double> dists(cloud.size());
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const auto nn = tree.nearest(reflect_point(current, cloud.points[i]));
      matches[i] = {nn.index, std::sqrt(nn.squared_distance)};
      dists[i] = matches[i].second;
    }
    auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
    std::nth_element(dists.begin(), mid, dists.end());
    const double cutoff = 3.0 * *mid;

    Matrix3 scatter = Matrix3::Zero();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (matches[i].second > cutoff) continue;
      const Vector3 diff = cloud.points[i] - cloud.points[matches[i].first];
      scatter += diff * diff.transpose();
    }
    const Eigen::SelfAdjointEigenSolver<Matrix3> eig(scatter);
    Vector3 normal = eig.eigenvectors().col(2);
    if (normal.dot(current.normal()) < 0) normal = -normal;
    if (!normal.allFinite() || eig.eigenvalues()[2] <= 0) break;

    double offset = 0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (matches[i].second > cutoff) continue;
      offset += normal.dot(0.5 * (cloud.points[i] + cloud.points[matches[i].first]));
      ++used;
    }
    const ReflectionPlane next(normal, offset / static_cast<double>(used));
    const double moved = reflection_distance(next, current);
    current = next;
    if (moved < 1e-10) break;
  }
  return current;
}

std::size_t default_vote_budget(std::size_t point_count) {
  return std::min<std::size_t>(10000, point_count * point_count / 2);
}

Detection detect_symmetry(const PointCloud& cloud, const DetectConfig& config) {
  if (cloud.size() < 8) throw Error(ErrorCode::kPrecondition, "detection needs at least 8 points");
  const auto [normalized, norm] = normalize_cloud(PointCloud(cloud.points));

  Rng rng(config.seed);
  const std::size_t budget =
      config.vote_budget ? config.vote_budget : default_vote_budget(normalized.size());
  const ReflectionDb votes = vote_pairs(normalized, budget, rng);

  Detection result;
  if (!votes.empty()) result.modes = cluster_modes(votes, config.density, config.cluster);

  // Every generator of a valid group is itself a mirror of the cloud, so
  // modes that fail as single mirrors cannot take part in any candidate.
  // The top-k list holds the heaviest modes that pass on their own.
  std::vector<ReflectionPlane> top;
  const std::size_t scan = std::min(result.modes.size(), config.scan_modes);
  for (std::size_t i = 0; i < scan && top.size() < config.top_k; ++i) {
    ReflectionPlane plane = result.modes[i].plane;
    if (config.refine_iterations > 0) {
      plane = refine_plane(normalized, plane, config.refine_iterations);
    }
    const bool duplicate = std::any_of(top.begin(), top.end(), [&](const ReflectionPlane& q) {
      return reflection_distance(q, plane) < kRefinedMergeRadius;
    });
    if (duplicate) continue;
    const SymmetryCheck single = validate_symmetry(normalized, GeneratorSet({plane}),
                                                   config.cover_tolerance, config.group,
                                                   config.boundary_eps);
    if (single.ok) top.push_back(plane);
  }

  struct Candidate {
    GeneratorSet gens;
    double residual;
    std::size_t domain_size;
    std::size_t order;
  };
  std::optional<Candidate> best;
  // A valid group of order |G| leaves a domain of about |c| / |G| points;
  // the raw counts of same-order candidates differ only by boundary noise,
  // so the order stands in for the domain size.
  const auto better = [](const Candidate& a, const Candidate& b) {
    if (a.order != b.order) return a.order > b.order;
    // residuals this close are rounding noise between equivalent generators
    if (std::abs(a.residual - b.residual) > 1e-12) return a.residual < b.residual;
    if (a.gens.active_count() != b.gens.active_count()) {
      return a.gens.active_count() < b.gens.active_count();
    }
    return a.domain_size < b.domain_size;
  };
  const auto consider = [&](std::vector<ReflectionPlane> planes) {
    try {
      const SymmetryGroup group = generate_group(GeneratorSet(std::move(planes)), config.group);
      DomainOptions domain_options;
      domain_options.boundary_eps = config.boundary_eps;
      domain_options.check_coverage = false;
      const FundamentalDomain domain =
          extract_fundamental_domain(group, normalized, domain_options);
      if (domain.indices.empty()) return;
      const SymmetryCheck check = validate_symmetry(normalized, group, config.cover_tolerance,
                                                    config.boundary_eps);
      if (!check.ok) return;
      Candidate c{group.generators, check.residual, domain.size(), group.order()};
      if (!best || better(c, *best)) best = std::move(c);
    } catch (const Error&) {
      // Non-terminating or otherwise invalid generator combination.
    }
  };

  const std::size_t k = top.size();
  for (std::size_t a = 0; a < k; ++a) {
    consider({top[a]});
    for (std::size_t b = a + 1; b < k; ++b) {
      consider({top[a], top[b]});
      for (std::size_t c = b + 1; c < k; ++c) consider({top[a], top[b], top[c]});
    }
  }

  if (!best) {
    result.domain_size = normalized.size();
    return result;
  }
  std::vector<ReflectionPlane> planes;
  for (const auto& p : best->gens.active()) planes.push_back(norm.inverse(p));
  result.generators = GeneratorSet(std::move(planes));
  result.found = true;
  result.residual = best->residual;
  result.domain_size = best->domain_size;
  result.group_order = best->order;
  return result;
}

GeneratorSet detect_symmetry_group(const PointCloud& cloud, const DetectConfig& config) {
  return detect_symmetry(cloud, config).generators;
}

}  // namespace quartet
