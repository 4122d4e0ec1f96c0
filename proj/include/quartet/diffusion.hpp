#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "quartet/rng.hpp"
#include "quartet/sampler.hpp"

namespace quartet {

// Forward kernel q(z_t | z_{t-1}) = N(mu_t z_{t-1}, sigma_t I). Note sigma_t
// is a variance here. By default mu_t = sqrt(1 - sigma_t). Steps are 1-based.
class DdpmSchedule {
 public:
  explicit DdpmSchedule(std::vector<double> sigmas);
  // Explicit means, 0 < mu_t <= 1. mu_t = 1 gives the variance-exploding
  // chain used by the Langevin sampler.
  DdpmSchedule(std::vector<double> sigmas, std::vector<double> mus);

  static DdpmSchedule linear(std::size_t tau = 1000, double sigma_first = 1e-4,
                             double sigma_last = 0.02);

  std::size_t tau() const { return sigmas_.size(); }
  double sigma(std::size_t t) const { return sigmas_.at(t - 1); }
  double mu(std::size_t t) const { return mus_.at(t - 1); }
  // prod_{s <= t} mu_s^2
  double alpha_bar(std::size_t t) const { return alpha_bars_.at(t - 1); }

 private:
  void derive();

  std::vector<double> sigmas_;
  std::vector<double> mus_;
  std::vector<double> alpha_bars_;
};

// Noise predictor eps_hat(z_t, t). Must be safe to call concurrently.
struct Denoiser {
  Eigen::Index dim = 0;
  std::function<Vector(const Vector&, std::size_t)> predict;
};

Vector forward_step(const Vector& z_prev, std::size_t t, const DdpmSchedule& schedule, Rng& rng);

// z_0 pushed through forward_step for steps 1..t.
Vector forward_chain(const Vector& z0, std::size_t t, const DdpmSchedule& schedule, Rng& rng);

// Closed-form marginal sqrt(alpha_bar_t) z0 + sqrt(1 - alpha_bar_t) eps.
Vector forward_marginal(const Vector& z0, std::size_t t, const DdpmSchedule& schedule, Rng& rng);

// |eps - eps_hat(z_t, t)|^2 for t ~ U{1..tau}, eps ~ N(0, I).
double ddpm_loss(const Denoiser& denoiser, const Vector& z0, const DdpmSchedule& schedule,
                 Rng& rng);
// Same at a fixed step.
double ddpm_loss_at(const Denoiser& denoiser, const Vector& z0, std::size_t t,
                    const DdpmSchedule& schedule, Rng& rng);

// Mean of p(z_{t-1} | z_t) under the eps-prediction parameterization.
Vector reverse_mean(const Denoiser& denoiser, const Vector& z_t, std::size_t t,
                    const DdpmSchedule& schedule);

// varsigma_t = sqrt(sigma_t).
std::vector<double> default_reverse_stddevs(const DdpmSchedule& schedule);

// z_tau ~ N(0, I), then z_{t-1} ~ N(reverse_mean, varsigma_t^2 I) down to z_0.
Vector reverse_sample(const Denoiser& denoiser, const DdpmSchedule& schedule,
                      const std::vector<double>& varsigmas, Rng& rng);
Vector reverse_sample_from(const Denoiser& denoiser, Vector z_tau, const DdpmSchedule& schedule,
                           const std::vector<double>& varsigmas, Rng& rng);

// Bayes-optimal noise predictor when the data distribution is the empirical
// distribution of `db`.
Denoiser kernel_denoiser(VectorDb db, DdpmSchedule schedule);

}  // namespace quartet
