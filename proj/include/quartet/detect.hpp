#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "quartet/geom.hpp"
#include "quartet/rng.hpp"
#include "quartet/symgroup.hpp"

namespace quartet {

// Votes in the reflection space, each a canonical plane embedded as (n, d).
struct ReflectionDb {
  std::vector<Vector4> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

// Gaussian kernel exp(-|u|^2 / 2) evaluated at (s - r) / bandwidth, summed
// over the entries within `radius` of s.
struct DensityParams {
  double bandwidth = 0.15;
  double radius = std::numeric_limits<double>::infinity();
};

// Each sampled point pair (a, b) votes for the plane through (a + b) / 2 with
// normal (a - b) / |a - b|. When the budget covers every pair, all pairs vote
// exactly once; otherwise `budget` pairs are drawn uniformly with replacement.
// Coincident pairs are skipped.
ReflectionDb vote_pairs(const PointCloud& cloud, std::size_t budget, Rng& rng);

// Euclidean distance between the (n, w d) embeddings, taken over both signs
// of one of them. Canonical signs jump for normals near the yz-plane, and
// (n, d), (-n, -d) are the same plane; the minimum is a metric on planes.
double reflection_distance(const ReflectionPlane& a, const ReflectionPlane& b,
                           double offset_weight = 1.0);

double density(const Vector4& s, const ReflectionDb& db, const DensityParams& params);

// Iterates the kernel-weighted mean until a step shorter than tol or max_iter
// steps. A point with no entries in its neighbourhood does not move.
Vector4 mean_shift(const Vector4& start, const ReflectionDb& db, const DensityParams& params,
                   int max_iter = 200, double tol = 1e-8);

struct Mode {
  ReflectionPlane plane;
  Vector4 location;  // converged point before re-unitizing the normal
  double mass = 0;   // fraction of entries whose ascent ends here
};

struct ClusterOptions {
  double merge_radius = 0.05;
  int max_iter = 200;
  double tol = 1e-8;
  // Seeds stop once their step is below this; the merged modes are then
  // polished to `tol`. Keeps the per-entry ascent cheap on large vote sets.
  double seed_tol = 1e-5;
  // An ascent that comes this close to an earlier end point stops and joins
  // it. Zero runs every ascent to seed_tol.
  double snap_radius = 0;
};

// Mean shift from every entry, merging end points within merge_radius.
// Sorted by mass, heaviest first.
std::vector<Mode> cluster_modes(const ReflectionDb& db, const DensityParams& params,
                                const ClusterOptions& options = {});

// Symmetric ICP on a single mirror: each point is matched to the nearest
// neighbour of its reflection, pairs beyond three times the median match
// distance are dropped, and the plane is re-fit from the remaining pairs
// (normal = dominant direction of the pair differences, offset = mean
// midpoint projection). Stops after `iterations` rounds or once the plane
// moves less than 1e-10.
ReflectionPlane refine_plane(const PointCloud& cloud, const ReflectionPlane& plane,
                             int iterations = 20);

// Defaults are tuned on unit-radius clouds with noise around 0.01.
struct DetectConfig {
  std::uint64_t seed = 0;
  // 0 selects min(10000, n^2 / 2).
  std::size_t vote_budget = 0;
  DensityParams density{0.05, 0.15};
  ClusterOptions cluster{.merge_radius = 0.05,
                         .max_iter = 200,
                         .tol = 1e-8,
                         .seed_tol = 1e-3,
                         .snap_radius = 0.02};
  // Modes are examined in mass order, at most scan_modes of them, and the
  // first top_k that hold up as single mirrors form the candidate pool.
  std::size_t top_k = 6;
  std::size_t scan_modes = 24;
  // Rounds of refine_plane applied to each top mode; 0 keeps raw modes.
  int refine_iterations = 20;
  double cover_tolerance = 0.002;
  double boundary_eps = 1e-6;
  GroupOptions group;
};

std::size_t default_vote_budget(std::size_t point_count);

struct Detection {
  GeneratorSet generators;  // in the input cloud's frame
  bool found = false;       // false: no candidate validated, generators empty
  double residual = 0;      // coverage residual on the normalized cloud
  std::size_t domain_size = 0;
  std::size_t group_order = 1;
  std::vector<Mode> modes;  // normalized frame
};

// Votes, clusters, and tries every subset of at most three of the top-k
// modes that pass as single mirrors. Among the subsets whose reconstruction
// residual on the normalized cloud is within the cover tolerance, the one with
// the smallest fundamental domain wins, judged by group order; ties go to the
// lower residual (up to 1e-12), then to fewer generators.
Detection detect_symmetry(const PointCloud& cloud, const DetectConfig& config = {});

GeneratorSet detect_symmetry_group(const PointCloud& cloud, const DetectConfig& config = {});

}  // namespace quartet
