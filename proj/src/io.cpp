#include "quartet/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "quartet/error.hpp"

namespace quartet {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view token, T& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

PointCloud parse_xyz(std::string_view text, const std::string& source) {
  PointCloud cloud;
  std::size_t columns = 0;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    const auto fail = [&](const std::string& what) {
      throw Error(ErrorCode::kParse, source + ":" + std::to_string(line_no) + ": " + what);
    };
    const auto tokens = split_ws(line);
    if (tokens.empty() || tokens.front().front() == '#') continue;
    if (tokens.size() != 3 && tokens.size() != 4) {
      fail("expected 'x y z [label]', got " + std::to_string(tokens.size()) + " columns");
    }
    if (columns == 0) columns = tokens.size();
    if (tokens.size() != columns) fail("inconsistent column count");
    Point3 p;
    for (int i = 0; i < 3; ++i) {
      if (!parse_number(tokens[i], p[i]) || !std::isfinite(p[i])) {
        fail("bad coordinate '" + std::string(tokens[i]) + "'");
      }
    }
    cloud.points.push_back(p);
    if (columns == 4) {
      int label = -1;
      if (!parse_number(tokens[3], label) || label < 0) {
        fail("bad label '" + std::string(tokens[3]) + "'");
      }
      cloud.labels.push_back(label);
    }
  }
  if (cloud.empty()) throw Error(ErrorCode::kParse, source + ": no points");
  try {
    cloud.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, source + ": " + e.what());
  }
  return cloud;
}

PointCloud read_xyz(const fs::path& path) { return parse_xyz(read_file(path), path.string()); }

std::string format_xyz(const PointCloud& cloud, const std::string& header) {
  std::string out;
  std::istringstream lines(header);
  for (std::string line; std::getline(lines, line);) out += "# " + line + "\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    out += format_double(p.x()) + " " + format_double(p.y()) + " " + format_double(p.z());
    if (cloud.has_labels()) out += " " + std::to_string(cloud.labels[i]);
    out += "\n";
  }
  return out;
}

void write_xyz(const fs::path& path, const PointCloud& cloud, const std::string& header) {
  write_file(path, format_xyz(cloud, header));
}

std::vector<NamedCloud> load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIo, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xyz") {
      files.push_back(entry.path());
    }
  }
  if (files.empty()) throw Error(ErrorCode::kIo, "no .xyz files in " + dir.string());
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  std::vector<NamedCloud> shapes;
  for (const auto& f : files) shapes.push_back({f.stem().string(), read_xyz(f)});
  return shapes;
}

void save_dataset(const fs::path& dir, const std::vector<NamedCloud>& shapes,
                  const std::string& header) {
  fs::create_directories(dir);
  for (const auto& s : shapes) write_xyz(dir / (s.id + ".xyz"), s.cloud, header);
}

PreprocessResult preprocess(const std::vector<NamedCloud>& shapes, std::uint64_t seed,
                            std::optional<std::vector<std::size_t>> targets) {
  PreprocessResult result;
  int parts = 0;
  for (const auto& s : shapes) parts = std::max(parts, s.cloud.part_count());

  if (targets) {
    if (targets->size() != static_cast<std::size_t>(parts)) {
      throw Error(ErrorCode::kPrecondition, "need one target count per part");
    }
    result.targets = *targets;
  } else {
    result.targets.assign(static_cast<std::size_t>(parts), 0);
    for (int j = 0; j < parts; ++j) {
      double sum = 0;
      std::size_t count = 0;
      for (const auto& s : shapes) {
        const std::size_t n = s.cloud.part_indices(j).size();
        if (n == 0) continue;
        sum += static_cast<double>(n);
        ++count;
      }
      result.targets[j] = static_cast<std::size_t>(std::llround(sum / static_cast<double>(count)));
    }
  }

  for (std::size_t k = 0; k < shapes.size(); ++k) {
    const NamedCloud& s = shapes[k];
    std::vector<int> missing;
    for (int j = 0; j < parts; ++j) {
      if (s.cloud.part_indices(j).empty()) missing.push_back(j);
    }
    if (!missing.empty()) {
      std::string list;
      for (int j : missing) list += (list.empty() ? "" : ",") + std::to_string(j);
      result.warnings.push_back("skipping shape '" + s.id + "': missing part(s) " + list);
      continue;
    }
    Rng rng = make_rng(seed, k);
    PointCloud out;
    for (int j = 0; j < parts; ++j) {
      PointCloud part = s.cloud.part(j);
      part = resample_part(part, result.targets[j], rng);
      out.points.insert(out.points.end(), part.points.begin(), part.points.end());
      if (s.cloud.has_labels()) out.labels.insert(out.labels.end(), part.size(), j);
    }
    result.shapes.push_back({s.id, std::move(out)});
  }
  return result;
}

// ---------------------------------------------------------------------------
// JSON records

bool SymmetryRecord::operator==(const SymmetryRecord& o) const {
  return shape_id == o.shape_id && part == o.part &&
         generators.flatten() == o.generators.flatten() && domain_indices == o.domain_indices &&
         residual == o.residual && found == o.found;
}

bool AssemblerRecord::operator==(const AssemblerRecord& o) const {
  return shape_id == o.shape_id && flatten_assemblers(assemblers) == flatten_assemblers(o.assemblers) &&
         rms == o.rms;
}

bool SampledSymmetryRecord::operator==(const SampledSymmetryRecord& o) const {
  return sample == o.sample && generators.flatten() == o.generators.flatten();
}

bool SdiRecord::operator==(const SdiRecord& o) const {
  return shape_id == o.shape_id && symmetry_source == o.symmetry_source &&
         report.kind == o.report.kind && report.raw == o.report.raw &&
         report.scaled == o.report.scaled && report.factor == o.report.factor &&
         report.normalized == o.report.normalized;
}

namespace {

Json flat_generators(const GeneratorSet& g) {
  const FlatGenerators f = g.flatten();
  return Json(std::vector<double>(f.data(), f.data() + f.size()));
}

GeneratorSet generators_from(const Json& j) {
  const auto values = j.get<std::vector<double>>();
  return GeneratorSet::from_flat(values);
}

template <typename F>
auto decode(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed ") + what + " record: " + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, std::string("malformed ") + what + " record: " + e.what());
  }
}

}  // namespace

Json to_json(const SymmetryRecord& r) {
  return Json{{"type", "symmetry"},
              {"shape", r.shape_id},
              {"part", r.part},
              {"generators", flat_generators(r.generators)},
              {"fd_indices", r.domain_indices},
              {"residual", r.residual},
              {"found", r.found}};
}

SymmetryRecord symmetry_record_from_json(const Json& j) {
  return decode("symmetry", [&] {
    SymmetryRecord r;
    r.shape_id = j.at("shape").get<std::string>();
    r.part = j.at("part").get<int>();
    r.generators = generators_from(j.at("generators"));
    r.domain_indices = j.at("fd_indices").get<std::vector<std::size_t>>();
    r.residual = j.at("residual").get<double>();
    r.found = j.at("found").get<bool>();
    if (!(r.residual >= 0)) throw Error(ErrorCode::kParse, "negative residual");
    return r;
  });
}

Json to_json(const AssemblerRecord& r) {
  const Vector flat = flatten_assemblers(r.assemblers);
  return Json{{"type", "assembler"},
              {"shape", r.shape_id},
              {"parts", r.assemblers.size()},
              {"assemblers", std::vector<double>(flat.data(), flat.data() + flat.size())},
              {"rms", r.rms}};
}

AssemblerRecord assembler_record_from_json(const Json& j) {
  return decode("assembler", [&] {
    AssemblerRecord r;
    r.shape_id = j.at("shape").get<std::string>();
    const auto values = j.at("assemblers").get<std::vector<double>>();
    const auto parts = j.at("parts").get<std::size_t>();
    if (values.size() != parts * kAssemblerWidth) {
      throw Error(ErrorCode::kParse, "assembler block length is not 9 * parts");
    }
    for (std::size_t p = 0; p < parts; ++p) {
      r.assemblers.push_back(Assembler::from_flat(
          std::span<const double>(values).subspan(p * kAssemblerWidth, kAssemblerWidth)));
    }
    r.rms = j.at("rms").get<std::vector<double>>();
    return r;
  });
}

Json to_json(const SampledSymmetryRecord& r) {
  return Json{{"type", "sampled_symmetry"},
              {"sample", r.sample},
              {"generators", flat_generators(r.generators)}};
}

SampledSymmetryRecord sampled_symmetry_record_from_json(const Json& j) {
  return decode("sampled_symmetry", [&] {
    SampledSymmetryRecord r;
    r.sample = j.at("sample").get<std::size_t>();
    r.generators = generators_from(j.at("generators"));
    return r;
  });
}

Json to_json(const EvalReport& r) {
  return Json{{"metric", std::string(metric_name(r.kind))},
              {"raw", r.raw},
              {"scaled", r.scaled},
              {"factor", r.factor},
              {"normalized", r.normalized},
              {"chamfer_variant", std::string(kChamferVariant)}};
}

EvalReport eval_report_from_json(const Json& j) {
  return decode("report", [&] {
    EvalReport r;
    r.kind = parse_metric(j.at("metric").get<std::string>());
    r.raw = j.at("raw").get<double>();
    r.scaled = j.at("scaled").get<double>();
    r.factor = j.at("factor").get<double>();
    r.normalized = j.at("normalized").get<bool>();
    return r;
  });
}

Json to_json(const SdiRecord& r) {
  return Json{{"type", "sdi"},
              {"shape", r.shape_id},
              {"symmetry", r.symmetry_source},
              {"report", to_json(r.report)}};
}

SdiRecord sdi_record_from_json(const Json& j) {
  return decode("sdi", [&] {
    SdiRecord r;
    r.shape_id = j.at("shape").get<std::string>();
    r.symmetry_source = j.at("symmetry").get<std::string>();
    r.report = eval_report_from_json(j.at("report"));
    return r;
  });
}

Json make_header(const std::string& command, std::uint64_t seed, const Json& config) {
  return Json{{"type", "header"}, {"tool", "quartet"}, {"command", command},
              {"seed", seed},     {"config", config}};
}

void write_jsonl(const fs::path& path, const Json& header, const std::vector<Json>& records) {
  std::string out = header.dump() + "\n";
  for (const auto& r : records) out += r.dump() + "\n";
  write_file(path, out);
}

std::vector<Json> read_jsonl(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<Json> records;
  std::istringstream lines(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(lines, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kParse,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (j.is_object() && j.value("type", "") == "header") continue;
    records.push_back(std::move(j));
  }
  return records;
}

std::vector<SymmetryRecord> read_symmetry_records(const fs::path& path) {
  std::vector<SymmetryRecord> out;
  for (const auto& j : read_jsonl(path)) out.push_back(symmetry_record_from_json(j));
  return out;
}

std::vector<AssemblerRecord> read_assembler_records(const fs::path& path) {
  std::vector<AssemblerRecord> out;
  for (const auto& j : read_jsonl(path)) out.push_back(assembler_record_from_json(j));
  return out;
}

}  // namespace quartet
