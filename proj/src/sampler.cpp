#include "quartet/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "quartet/error.hpp"

namespace quartet {

NoiseSchedule::NoiseSchedule(std::vector<double> sigmas) : sigmas_(std::move(sigmas)) {
  if (sigmas_.empty()) throw Error(ErrorCode::kPrecondition, "noise schedule needs >= 1 level");
  double sum = 0;
  gammas_.reserve(sigmas_.size());
  for (double s : sigmas_) {
    if (!(s > 0) || !std::isfinite(s)) {
      throw Error(ErrorCode::kPrecondition, "noise levels must be positive and finite");
    }
    sum += s * s;
    gammas_.push_back(std::sqrt(sum));
  }
}

NoiseSchedule NoiseSchedule::geometric(std::size_t tau, double gamma_min, double gamma_max) {
  if (tau < 1 || !(gamma_min > 0) || !(gamma_max >= gamma_min)) {
    throw Error(ErrorCode::kPrecondition, "invalid geometric schedule");
  }
  if (tau > 1 && gamma_max == gamma_min) {
    throw Error(ErrorCode::kPrecondition, "gamma must strictly increase across levels");
  }
  std::vector<double> sigmas;
  double previous2 = 0;
  for (std::size_t t = 1; t <= tau; ++t) {
    const double frac = tau == 1 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(tau - 1);
    const double gamma = gamma_min * std::pow(gamma_max / gamma_min, frac);
    sigmas.push_back(std::sqrt(gamma * gamma - previous2));
    previous2 = gamma * gamma;
  }
  return NoiseSchedule(std::move(sigmas));
}

double LangevinConfig::beta(const NoiseSchedule& schedule, std::size_t t) const {
  if (betas.empty()) return schedule.gamma(t) * schedule.gamma(t);
  return betas.at(t - 1);
}

VectorDb::VectorDb(std::vector<Vector> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw Error(ErrorCode::kPrecondition, "vector db must be non-empty");
  const Eigen::Index d = entries_.front().size();
  for (const auto& e : entries_) {
    if (e.size() != d) throw Error(ErrorCode::kPrecondition, "vector db entries differ in size");
  }
}

Vector perturb(const Vector& v0, std::size_t t, const NoiseSchedule& schedule, Rng& rng) {
  return v0 + schedule.gamma(t) * standard_normal(rng, v0.size());
}

Vector kernel_weighted_mean(const Vector& v, const VectorDb& db, double gamma) {
  if (db.size() == 0) throw Error(ErrorCode::kPrecondition, "vector db must be non-empty");
  if (v.size() != db.dim()) throw Error(ErrorCode::kPrecondition, "dimension mismatch");
  if (!(gamma > 0) || !std::isfinite(gamma)) {
    throw Error(ErrorCode::kScoreUndefined, "score undefined at this noise level");
  }
  const double inv2g2 = 1.0 / (2.0 * gamma * gamma);
  std::vector<double> logw(db.size());
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < db.size(); ++i) {
    logw[i] = -(v - db.entries()[i]).squaredNorm() * inv2g2;
    max_log = std::max(max_log, logw[i]);
  }
  Vector mean = Vector::Zero(v.size());
  double total = 0;
  for (std::size_t i = 0; i < db.size(); ++i) {
    const double w = std::exp(logw[i] - max_log);
    mean += w * db.entries()[i];
    total += w;
  }
  if (!(total > 0) || !std::isfinite(total) || !mean.allFinite()) {
    throw Error(ErrorCode::kScoreUndefined, "score undefined at this noise level");
  }
  return mean / total;
}

Vector empirical_score(const Vector& v, std::size_t t, const VectorDb& db,
                       const NoiseSchedule& schedule) {
  const double gamma = schedule.gamma(t);
  return (kernel_weighted_mean(v, db, gamma) - v) / (gamma * gamma);
}

Vector langevin_step(const Vector& v, std::size_t t, const VectorDb& db,
                     const NoiseSchedule& schedule, double beta, const Vector& noise) {
  return v + beta * empirical_score(v, t, db, schedule) + std::sqrt(2.0 * beta) * noise;
}

Vector meanshift_form_update(const Vector& v, std::size_t t, const VectorDb& db,
                             const NoiseSchedule& schedule, const Vector& noise) {
  const double gamma = schedule.gamma(t);
  return kernel_weighted_mean(v, db, gamma) + std::sqrt(2.0) * gamma * noise;
}

Vector meanshift_form_update(const Vector& v, std::size_t t, const VectorDb& db,
                             const NoiseSchedule& schedule, Rng& rng) {
  return meanshift_form_update(v, t, db, schedule, standard_normal(rng, v.size()));
}

Vector langevin_sample(const VectorDb& db, const NoiseSchedule& schedule,
                       const LangevinConfig& config, Rng& rng) {
  if (db.size() == 0) throw Error(ErrorCode::kPrecondition, "vector db must be non-empty");
  if (config.inner_steps < 1) {
    throw Error(ErrorCode::kPrecondition, "Langevin needs at least one inner step per level");
  }
  if (!config.betas.empty() && config.betas.size() != schedule.tau()) {
    throw Error(ErrorCode::kPrecondition, "need one step size per noise level");
  }
  for (double b : config.betas) {
    if (!(b > 0)) throw Error(ErrorCode::kPrecondition, "step sizes must be positive");
  }
  Vector s = standard_normal(rng, db.dim());
  for (std::size_t t = schedule.tau(); t >= 1; --t) {
    const double beta = config.beta(schedule, t);
    for (std::size_t i = 0; i < config.inner_steps; ++i) {
      s = langevin_step(s, t, db, schedule, beta, standard_normal(rng, s.size()));
    }
  }
  return s;
}

GeneratorSet project_generator_set(const Vector& raw, double slot_threshold,
                                   double snap_tolerance) {
  if (raw.size() != kGeneratorWidth) {
    throw Error(ErrorCode::kPrecondition, "generator vectors have 12 components");
  }
  constexpr double kDuplicateRadius = 0.05;
  std::vector<ReflectionPlane> planes;
  for (int s = 0; s < kGeneratorSlots; ++s) {
    const Vector3 n = raw.segment<3>(4 * s);
    const double len = n.norm();
    if (len < slot_threshold) continue;
    ReflectionPlane plane(n / len, raw[4 * s + 3]);
    const bool duplicate = std::any_of(planes.begin(), planes.end(), [&](const auto& p) {
      // (n, d) and (-n, -d) are the same plane; canonical signs can differ
      // for planes near a coordinate axis
      return std::min((p.embedding() - plane.embedding()).norm(),
                      (p.embedding() + plane.embedding()).norm()) < kDuplicateRadius;
    });
    if (!duplicate) planes.push_back(plane);
  }
  return snap_dihedral_angles(GeneratorSet(std::move(planes)), snap_tolerance);
}

GeneratorSet sample_generator_set(const VectorDb& db, const NoiseSchedule& schedule,
                                  const LangevinConfig& config, Rng& rng,
                                  const GeneratorSampling& options) {
  if (db.dim() != kGeneratorWidth) {
    throw Error(ErrorCode::kPrecondition, "generator db entries must have 12 components");
  }
  for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
    const Vector raw = langevin_sample(db, schedule, config, rng);
    GeneratorSet gens =
        project_generator_set(raw, options.slot_threshold, options.group.snap_tolerance);
    try {
      return generate_group(gens, options.group).generators;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNonTerminatingGroup &&
          e.code() != ErrorCode::kTranslationResult) {
        throw;
      }
    }
  }
  throw Error(ErrorCode::kNonTerminatingGroup,
              "no finite group after " + std::to_string(options.max_retries) + " retries");
}

}  // namespace quartet
