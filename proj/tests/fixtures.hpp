#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Geometry>

#include "quartet/geom.hpp"
#include "quartet/rng.hpp"

namespace quartet::testing {

inline Matrix3 random_rotation(Rng& rng) {
  std::normal_distribution<double> normal;
  Eigen::Quaterniond q(normal(rng), normal(rng), normal(rng), normal(rng));
  return q.normalized().toRotationMatrix();
}

inline Vector3 random_unit(Rng& rng) {
  std::normal_distribution<double> normal;
  Vector3 v(normal(rng), normal(rng), normal(rng));
  return v.normalized();
}

// Anisotropic Gaussian blobs with random placement, a rough stand-in for a
// part-based shape. Each blob is bent quadratically so it has no mirror
// plane of its own.
inline std::vector<Point3> blob_cloud(Rng& rng, std::size_t n, int blobs, double x_min = -1.0) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0), width(0.05, 0.35), bend(1.0, 3.0);
  std::normal_distribution<double> normal;
  std::vector<Point3> out;
  out.reserve(n);
  for (int b = 0; b < blobs; ++b) {
    const Point3 center(x_min + (1.0 - x_min) * 0.5 * (unit(rng) + 1.0), unit(rng), unit(rng));
    const Vector3 sd(width(rng), width(rng), width(rng));
    const Matrix3 rot = random_rotation(rng);
    const double k = bend(rng);
    const std::size_t count = n / blobs + (static_cast<std::size_t>(b) < n % blobs ? 1 : 0);
    for (std::size_t i = 0; i < count; ++i) {
      Vector3 z(normal(rng) * sd.x(), normal(rng) * sd.y(), normal(rng) * sd.z());
      z.y() += k * z.x() * z.x() + k * z.x() * z.z();
      out.push_back(center + rot * z);
    }
  }
  return out;
}

struct PlantedMirror {
  PointCloud cloud;
  ReflectionPlane mirror;
};

// n points (n even) symmetric under one mirror, normalized to unit radius,
// perturbed by isotropic noise of the given sigma, then moved by a random
// rotation and a translation of length up to 0.3.
inline PlantedMirror planted_mirror(Rng& rng, std::size_t n = 512, double sigma = 0.01) {
  const auto half = blob_cloud(rng, n / 2, 4, 0.05);
  PointCloud cloud;
  for (const auto& p : half) cloud.points.push_back(p);
  for (const auto& p : half) cloud.points.emplace_back(-p.x(), p.y(), p.z());
  auto [normalized, norm] = normalize_cloud(cloud);
  ReflectionPlane mirror = norm.forward(ReflectionPlane(Vector3::UnitX(), 0.0));

  std::normal_distribution<double> noise(0.0, sigma);
  for (auto& p : normalized.points) p += Vector3(noise(rng), noise(rng), noise(rng));

  const Matrix3 rot = random_rotation(rng);
  std::uniform_real_distribution<double> shift(0.0, 0.3);
  const Vector3 t = random_unit(rng) * shift(rng);
  for (auto& p : normalized.points) p = rot * p + t;
  const Vector3 n_new = rot * mirror.normal();
  mirror = ReflectionPlane(n_new, mirror.offset() + n_new.dot(t));
  return {std::move(normalized), mirror};
}

}  // namespace quartet::testing
