#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "quartet/rng.hpp"
#include "quartet/symgroup.hpp"

namespace quartet {

using Vector = Eigen::VectorXd;

// Noise levels for the variance-exploding perturbation S_t = S_0 + gamma_t e.
// gamma_t = sqrt(sum_{i<=t} sigma_i^2), derived from the sigmas on
// construction. Steps are 1-based.
class NoiseSchedule {
 public:
  explicit NoiseSchedule(std::vector<double> sigmas);

  // tau levels with gamma geometric from gamma_min (t = 1) to gamma_max
  // (t = tau); sigmas are back-solved.
  static NoiseSchedule geometric(std::size_t tau = 50, double gamma_min = 0.01,
                                 double gamma_max = 1.0);

  std::size_t tau() const { return sigmas_.size(); }
  double sigma(std::size_t t) const { return sigmas_.at(t - 1); }
  double gamma(std::size_t t) const { return gammas_.at(t - 1); }
  const std::vector<double>& sigmas() const { return sigmas_; }
  const std::vector<double>& gammas() const { return gammas_; }

 private:
  std::vector<double> sigmas_;
  std::vector<double> gammas_;
};

struct LangevinConfig {
  std::size_t inner_steps = 10;
  // Step size per level (1-based, index t-1). Empty means beta_t = gamma_t^2.
  std::vector<double> betas;

  double beta(const NoiseSchedule& schedule, std::size_t t) const;
};

// Fixed-dimension vectors forming the empirical data distribution.
class VectorDb {
 public:
  VectorDb() = default;
  explicit VectorDb(std::vector<Vector> entries);

  std::size_t size() const { return entries_.size(); }
  Eigen::Index dim() const { return entries_.empty() ? 0 : entries_.front().size(); }
  const std::vector<Vector>& entries() const { return entries_; }

 private:
  std::vector<Vector> entries_;
};

// v0 + gamma_t * e with e standard normal.
Vector perturb(const Vector& v0, std::size_t t, const NoiseSchedule& schedule, Rng& rng);

// Mean of the db entries weighted by the isotropic Gaussian density
// N(v; R, gamma^2 I), computed with log-sum-exp.
Vector kernel_weighted_mean(const Vector& v, const VectorDb& db, double gamma);

// (weighted mean - v) / gamma_t^2: the score of the db smoothed at gamma_t.
// Throws kScoreUndefined if the weights cannot be normalized.
Vector empirical_score(const Vector& v, std::size_t t, const VectorDb& db,
                       const NoiseSchedule& schedule);

// One inner update v + beta_t * score + sqrt(2 beta_t) * noise.
Vector langevin_step(const Vector& v, std::size_t t, const VectorDb& db,
                     const NoiseSchedule& schedule, double beta, const Vector& noise);

// The same update written for beta_t = gamma_t^2: weighted mean plus
// sqrt(2) gamma_t * noise. Equal to langevin_step up to rounding.
Vector meanshift_form_update(const Vector& v, std::size_t t, const VectorDb& db,
                             const NoiseSchedule& schedule, const Vector& noise);
Vector meanshift_form_update(const Vector& v, std::size_t t, const VectorDb& db,
                             const NoiseSchedule& schedule, Rng& rng);

// Annealed Langevin dynamics: start from N(0, I), run inner_steps updates at
// each level t = tau .. 1 and return the last iterate.
Vector langevin_sample(const VectorDb& db, const NoiseSchedule& schedule,
                       const LangevinConfig& config, Rng& rng);

struct GeneratorSampling {
  double slot_threshold = 0.5;
  int max_retries = 8;
  GroupOptions group;
};

// Decodes a raw 12-vector: slots whose normal part is shorter than the
// threshold are inactive, the rest are re-unitized and canonicalized, then
// duplicates dropped and dihedral angles snapped.
GeneratorSet project_generator_set(const Vector& raw, double slot_threshold = 0.5,
                                   double snap_tolerance = GroupOptions{}.snap_tolerance);

// Samples a 12-vector by annealed Langevin dynamics over the db and projects
// it; re-samples when the projected set does not generate a finite group.
GeneratorSet sample_generator_set(const VectorDb& db, const NoiseSchedule& schedule,
                                  const LangevinConfig& config, Rng& rng,
                                  const GeneratorSampling& options = {});

}  // namespace quartet
