#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "quartet/detect.hpp"
#include "quartet/io.hpp"
#include "quartet/metrics.hpp"
#include "quartet/sampler.hpp"
#include "quartet/symgroup.hpp"

namespace quartet {

// Flat run configuration. Files hold "key = value" lines; '#' starts a
// comment. Unknown keys and malformed values are rejected with kConfig.
struct RunConfig {
  std::uint64_t seed = 0;

  // detection
  std::size_t vote_budget = 0;
  double bandwidth = DetectConfig{}.density.bandwidth;
  double neighborhood_radius = DetectConfig{}.density.radius;
  double merge_radius = DetectConfig{}.cluster.merge_radius;
  double snap_radius = DetectConfig{}.cluster.snap_radius;
  std::size_t top_k = DetectConfig{}.top_k;
  std::size_t scan_modes = DetectConfig{}.scan_modes;
  int refine_iterations = DetectConfig{}.refine_iterations;
  int max_iter = DetectConfig{}.cluster.max_iter;
  double mean_shift_tol = DetectConfig{}.cluster.tol;
  double seed_tol = DetectConfig{}.cluster.seed_tol;
  double cover_tolerance = DetectConfig{}.cover_tolerance;
  double boundary_eps = DetectConfig{}.boundary_eps;

  // groups
  std::size_t max_order = GroupOptions{}.max_order;
  double snap_tolerance_deg = 1.5;

  // sampling
  std::size_t tau = 50;
  double gamma_min = 0.01;
  double gamma_max = 1.0;
  int langevin_steps = 10;
  double slot_threshold = GeneratorSampling{}.slot_threshold;
  int max_retries = GeneratorSampling{}.max_retries;

  // evaluation
  std::size_t emd_cap = EmdOptions{}.exact_cap;
  bool emd_approximate = false;

  void set(std::string_view key, std::string_view value);
  void validate() const;

  GroupOptions group_options() const;
  DetectConfig detect_config() const;
  DomainOptions domain_options() const;
  NoiseSchedule noise_schedule() const;
  LangevinConfig langevin_config() const;
  GeneratorSampling generator_sampling() const;
  EmdOptions emd_options() const;
  SdiOptions sdi_options() const;

  Json to_json() const;
};

RunConfig parse_run_config(std::string_view text, const std::string& source = "<memory>");
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace quartet
