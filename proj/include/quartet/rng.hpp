#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace quartet {

using Rng = std::mt19937_64;

// Derives an independent stream for task `index` from a root seed so that
// parallel work stays reproducible regardless of scheduling.
inline std::uint64_t split_seed(std::uint64_t root, std::uint64_t index) {
  std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t root, std::uint64_t index) {
  return Rng(split_seed(root, index));
}

inline Eigen::VectorXd standard_normal(Rng& rng, Eigen::Index dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = normal(rng);
  return v;
}

}  // namespace quartet
