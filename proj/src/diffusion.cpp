#include "quartet/diffusion.hpp"

#include <cmath>

#include "quartet/error.hpp"

namespace quartet {

DdpmSchedule::DdpmSchedule(std::vector<double> sigmas) : sigmas_(std::move(sigmas)) {
  for (double s : sigmas_) {
    if (!(s > 0 && s < 1)) throw Error(ErrorCode::kPrecondition, "DDPM variances must lie in (0, 1)");
    mus_.push_back(std::sqrt(1.0 - s));
  }
  derive();
}

DdpmSchedule::DdpmSchedule(std::vector<double> sigmas, std::vector<double> mus)
    : sigmas_(std::move(sigmas)), mus_(std::move(mus)) {
  if (mus_.size() != sigmas_.size()) {
    throw Error(ErrorCode::kPrecondition, "need one mean factor per step");
  }
  for (std::size_t i = 0; i < sigmas_.size(); ++i) {
    if (!(sigmas_[i] > 0) || !(mus_[i] > 0 && mus_[i] <= 1)) {
      throw Error(ErrorCode::kPrecondition, "invalid DDPM schedule entry");
    }
  }
  derive();
}

void DdpmSchedule::derive() {
  if (sigmas_.empty()) throw Error(ErrorCode::kPrecondition, "DDPM schedule needs >= 1 step");
  double prod = 1;
  alpha_bars_.clear();
  for (double mu : mus_) {
    prod *= mu * mu;
    alpha_bars_.push_back(prod);
  }
}

DdpmSchedule DdpmSchedule::linear(std::size_t tau, double sigma_first, double sigma_last) {
  if (tau < 1) throw Error(ErrorCode::kPrecondition, "DDPM schedule needs >= 1 step");
  std::vector<double> sigmas(tau);
  for (std::size_t t = 0; t < tau; ++t) {
    const double frac = tau == 1 ? 0.0 : static_cast<double>(t) / static_cast<double>(tau - 1);
    sigmas[t] = sigma_first + frac * (sigma_last - sigma_first);
  }
  return DdpmSchedule(std::move(sigmas));
}

Vector forward_step(const Vector& z_prev, std::size_t t, const DdpmSchedule& schedule, Rng& rng) {
  if (t < 1 || t > schedule.tau()) throw Error(ErrorCode::kPrecondition, "step out of range");
  return schedule.mu(t) * z_prev + std::sqrt(schedule.sigma(t)) * standard_normal(rng, z_prev.size());
}

Vector forward_chain(const Vector& z0, std::size_t t, const DdpmSchedule& schedule, Rng& rng) {
  Vector z = z0;
  for (std::size_t s = 1; s <= t; ++s) z = forward_step(z, s, schedule, rng);
  return z;
}

Vector forward_marginal(const Vector& z0, std::size_t t, const DdpmSchedule& schedule, Rng& rng) {
  const double ab = schedule.alpha_bar(t);
  return std::sqrt(ab) * z0 + std::sqrt(1.0 - ab) * standard_normal(rng, z0.size());
}

double ddpm_loss_at(const Denoiser& denoiser, const Vector& z0, std::size_t t,
                    const DdpmSchedule& schedule, Rng& rng) {
  const double ab = schedule.alpha_bar(t);
  const Vector eps = standard_normal(rng, z0.size());
  const Vector z_t = std::sqrt(ab) * z0 + std::sqrt(1.0 - ab) * eps;
  return (eps - denoiser.predict(z_t, t)).squaredNorm();
}

double ddpm_loss(const Denoiser& denoiser, const Vector& z0, const DdpmSchedule& schedule,
                 Rng& rng) {
  std::uniform_int_distribution<std::size_t> step(1, schedule.tau());
  const std::size_t t = step(rng);
  return ddpm_loss_at(denoiser, z0, t, schedule, rng);
}

Vector reverse_mean(const Denoiser& denoiser, const Vector& z_t, std::size_t t,
                    const DdpmSchedule& schedule) {
  const Vector eps_hat = denoiser.predict(z_t, t);
  if (eps_hat.size() != z_t.size()) {
    throw Error(ErrorCode::kPrecondition, "denoiser output dimension differs from input");
  }
  const double coef = schedule.sigma(t) / std::sqrt(1.0 - schedule.alpha_bar(t));
  return (z_t - coef * eps_hat) / schedule.mu(t);
}

std::vector<double> default_reverse_stddevs(const DdpmSchedule& schedule) {
  std::vector<double> out;
  for (std::size_t t = 1; t <= schedule.tau(); ++t) out.push_back(std::sqrt(schedule.sigma(t)));
  return out;
}

Vector reverse_sample_from(const Denoiser& denoiser, Vector z, const DdpmSchedule& schedule,
                           const std::vector<double>& varsigmas, Rng& rng) {
  if (varsigmas.size() != schedule.tau()) {
    throw Error(ErrorCode::kPrecondition, "need one reverse variance per step");
  }
  for (std::size_t t = schedule.tau(); t >= 1; --t) {
    Vector mean = reverse_mean(denoiser, z, t, schedule);
    const double sd = varsigmas[t - 1];
    z = sd > 0 ? Vector(mean + sd * standard_normal(rng, mean.size())) : mean;
  }
  return z;
}

Vector reverse_sample(const Denoiser& denoiser, const DdpmSchedule& schedule,
                      const std::vector<double>& varsigmas, Rng& rng) {
  if (denoiser.dim < 1) throw Error(ErrorCode::kPrecondition, "denoiser dimension must be >= 1");
  return reverse_sample_from(denoiser, standard_normal(rng, denoiser.dim), schedule, varsigmas,
                             rng);
}

Denoiser kernel_denoiser(VectorDb db, DdpmSchedule schedule) {
  const Eigen::Index dim = db.dim();
  return {dim, [db = std::move(db), schedule = std::move(schedule)](const Vector& z,
                                                                    std::size_t t) {
            const double ab = schedule.alpha_bar(t);
            const double root = std::sqrt(ab);
            // Posterior over entries: N(z; sqrt(ab) R, (1 - ab) I).
            const Vector expected =
                kernel_weighted_mean(z / root, db, std::sqrt((1.0 - ab) / ab));
            return Vector((z - root * expected) / std::sqrt(1.0 - ab));
          }};
}

}  // namespace quartet
