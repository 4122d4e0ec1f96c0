#include "quartet/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "quartet/error.hpp"

namespace quartet {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::kConfig,
              "bad value '" + std::string(value) + "' for key '" + std::string(key) + "'");
}

template <typename T>
T parse_as(std::string_view key, std::string_view value) {
  T out{};
  std::string_view v = value;
  if (!v.empty() && v.front() == '+') v.remove_prefix(1);
  if constexpr (std::is_floating_point_v<T>) {
    if (v == "inf" || v == "infinity") return std::numeric_limits<T>::infinity();
  }
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, value);
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value);
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  using Setter = std::function<void(std::string_view)>;
  const std::map<std::string_view, Setter> setters = {
      {"seed", [&](auto v) { seed = parse_as<std::uint64_t>(key, v); }},
      {"vote_budget", [&](auto v) { vote_budget = parse_as<std::size_t>(key, v); }},
      {"bandwidth", [&](auto v) { bandwidth = parse_as<double>(key, v); }},
      {"neighborhood_radius", [&](auto v) { neighborhood_radius = parse_as<double>(key, v); }},
      {"merge_radius", [&](auto v) { merge_radius = parse_as<double>(key, v); }},
      {"snap_radius", [&](auto v) { snap_radius = parse_as<double>(key, v); }},
      {"top_k", [&](auto v) { top_k = parse_as<std::size_t>(key, v); }},
      {"scan_modes", [&](auto v) { scan_modes = parse_as<std::size_t>(key, v); }},
      {"refine_iterations", [&](auto v) { refine_iterations = parse_as<int>(key, v); }},
      {"max_iter", [&](auto v) { max_iter = parse_as<int>(key, v); }},
      {"mean_shift_tol", [&](auto v) { mean_shift_tol = parse_as<double>(key, v); }},
      {"seed_tol", [&](auto v) { seed_tol = parse_as<double>(key, v); }},
      {"cover_tolerance", [&](auto v) { cover_tolerance = parse_as<double>(key, v); }},
      {"boundary_eps", [&](auto v) { boundary_eps = parse_as<double>(key, v); }},
      {"max_order", [&](auto v) { max_order = parse_as<std::size_t>(key, v); }},
      {"snap_tolerance_deg", [&](auto v) { snap_tolerance_deg = parse_as<double>(key, v); }},
      {"tau", [&](auto v) { tau = parse_as<std::size_t>(key, v); }},
      {"gamma_min", [&](auto v) { gamma_min = parse_as<double>(key, v); }},
      {"gamma_max", [&](auto v) { gamma_max = parse_as<double>(key, v); }},
      {"langevin_steps", [&](auto v) { langevin_steps = parse_as<int>(key, v); }},
      {"slot_threshold", [&](auto v) { slot_threshold = parse_as<double>(key, v); }},
      {"max_retries", [&](auto v) { max_retries = parse_as<int>(key, v); }},
      {"emd_cap", [&](auto v) { emd_cap = parse_as<std::size_t>(key, v); }},
      {"emd_approximate", [&](auto v) { emd_approximate = parse_bool(key, v); }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw Error(ErrorCode::kConfig, "unknown key '" + std::string(key) + "'");
  it->second(value);
}

void RunConfig::validate() const {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::kConfig, what);
  };
  require(bandwidth > 0 && std::isfinite(bandwidth), "bandwidth must be positive");
  require(neighborhood_radius > 0, "neighborhood_radius must be positive");
  require(merge_radius > 0, "merge_radius must be positive");
  require(snap_radius >= 0, "snap_radius must be non-negative");
  require(top_k >= 1, "top_k must be at least 1");
  require(scan_modes >= top_k, "scan_modes must be at least top_k");
  require(refine_iterations >= 0, "refine_iterations must be non-negative");
  require(max_iter >= 1, "max_iter must be at least 1");
  require(mean_shift_tol > 0 && seed_tol > 0, "mean shift tolerances must be positive");
  require(cover_tolerance > 0, "cover_tolerance must be positive");
  require(boundary_eps >= 0, "boundary_eps must be non-negative");
  require(max_order >= 1, "max_order must be at least 1");
  require(snap_tolerance_deg >= 0, "snap_tolerance_deg must be non-negative");
  require(tau >= 1, "tau must be at least 1");
  require(gamma_min > 0 && gamma_max >= gamma_min, "need 0 < gamma_min <= gamma_max");
  require(langevin_steps >= 1, "langevin_steps must be at least 1");
  require(slot_threshold > 0, "slot_threshold must be positive");
  require(max_retries >= 0, "max_retries must be non-negative");
  require(emd_cap >= 1, "emd_cap must be at least 1");
}

GroupOptions RunConfig::group_options() const {
  GroupOptions g;
  g.max_order = max_order;
  g.snap_tolerance = snap_tolerance_deg * std::numbers::pi / 180.0;
  return g;
}

DetectConfig RunConfig::detect_config() const {
  DetectConfig c;
  c.seed = seed;
  c.vote_budget = vote_budget;
  c.density = {bandwidth, neighborhood_radius};
  c.cluster.merge_radius = merge_radius;
  c.cluster.max_iter = max_iter;
  c.cluster.tol = mean_shift_tol;
  c.cluster.seed_tol = seed_tol;
  c.cluster.snap_radius = snap_radius;
  c.scan_modes = scan_modes;
  c.refine_iterations = refine_iterations;
  c.top_k = top_k;
  c.cover_tolerance = cover_tolerance;
  c.boundary_eps = boundary_eps;
  c.group = group_options();
  return c;
}

DomainOptions RunConfig::domain_options() const {
  DomainOptions d;
  d.boundary_eps = boundary_eps;
  d.cover_tolerance = cover_tolerance;
  return d;
}

NoiseSchedule RunConfig::noise_schedule() const {
  return NoiseSchedule::geometric(tau, gamma_min, gamma_max);
}

LangevinConfig RunConfig::langevin_config() const {
  LangevinConfig l;
  l.inner_steps = static_cast<std::size_t>(langevin_steps);
  return l;
}

GeneratorSampling RunConfig::generator_sampling() const {
  GeneratorSampling s;
  s.slot_threshold = slot_threshold;
  s.max_retries = max_retries;
  s.group = group_options();
  return s;
}

EmdOptions RunConfig::emd_options() const {
  EmdOptions e;
  e.exact_cap = emd_cap;
  e.approximate = emd_approximate;
  return e;
}

SdiOptions RunConfig::sdi_options() const {
  SdiOptions s;
  s.seed = seed;
  s.emd = emd_options();
  s.group = group_options();
  s.boundary_eps = boundary_eps;
  return s;
}

Json RunConfig::to_json() const {
  const auto num = [](double v) -> Json {
    if (std::isinf(v)) return "inf";
    return v;
  };
  return Json{{"seed", seed},
              {"vote_budget", vote_budget},
              {"bandwidth", bandwidth},
              {"neighborhood_radius", num(neighborhood_radius)},
              {"merge_radius", merge_radius},
              {"snap_radius", snap_radius},
              {"top_k", top_k},
              {"scan_modes", scan_modes},
              {"refine_iterations", refine_iterations},
              {"max_iter", max_iter},
              {"mean_shift_tol", mean_shift_tol},
              {"seed_tol", seed_tol},
              {"cover_tolerance", cover_tolerance},
              {"boundary_eps", boundary_eps},
              {"max_order", max_order},
              {"snap_tolerance_deg", snap_tolerance_deg},
              {"tau", tau},
              {"gamma_min", gamma_min},
              {"gamma_max", gamma_max},
              {"langevin_steps", langevin_steps},
              {"slot_threshold", slot_threshold},
              {"max_retries", max_retries},
              {"emd_cap", emd_cap},
              {"emd_approximate", emd_approximate}};
}

RunConfig parse_run_config(std::string_view text, const std::string& source) {
  RunConfig config;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    try {
      if (eq == std::string_view::npos) throw Error(ErrorCode::kConfig, "expected 'key = value'");
      config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfig, source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  config.validate();
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path.string());
}

}  // namespace quartet
