#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "quartet/assembly.hpp"
#include "quartet/geom.hpp"
#include "quartet/metrics.hpp"
#include "quartet/symgroup.hpp"

namespace quartet {

using Json = nlohmann::json;

// Labeled XYZ text: one point per line, "x y z [label]". Blank lines and lines
// starting with '#' are ignored. Every data line has the same column count.
PointCloud parse_xyz(std::string_view text, const std::string& source = "<memory>");
PointCloud read_xyz(const std::filesystem::path& path);
// Coordinates are written with 17 significant digits. `header` lines are
// emitted as '#' comments.
std::string format_xyz(const PointCloud& cloud, const std::string& header = "");
void write_xyz(const std::filesystem::path& path, const PointCloud& cloud,
               const std::string& header = "");

struct NamedCloud {
  std::string id;
  PointCloud cloud;
};

// Every *.xyz file in `dir`, ordered by filename; the id is the file stem.
// Throws kIo for a missing or empty directory and kParse on malformed lines.
std::vector<NamedCloud> load_dataset(const std::filesystem::path& dir);
void save_dataset(const std::filesystem::path& dir, const std::vector<NamedCloud>& shapes,
                  const std::string& header = "");

struct PreprocessResult {
  std::vector<NamedCloud> shapes;
  std::vector<std::size_t> targets;  // per part
  std::vector<std::string> warnings;
};

// Resamples part j of every shape to targets[j]; when no targets are given
// they are the rounded mean part sizes over the shapes that have the part.
// Shapes lacking a part that other shapes have are skipped with a warning.
PreprocessResult preprocess(const std::vector<NamedCloud>& shapes, std::uint64_t seed,
                            std::optional<std::vector<std::size_t>> targets = std::nullopt);

struct SymmetryRecord {
  std::string shape_id;
  int part = 0;
  GeneratorSet generators;
  std::vector<std::size_t> domain_indices;
  double residual = 0;
  bool found = false;

  bool operator==(const SymmetryRecord& other) const;
};

struct AssemblerRecord {
  std::string shape_id;
  AssemblerSet assemblers;
  std::vector<double> rms;

  bool operator==(const AssemblerRecord& other) const;
};

struct SampledSymmetryRecord {
  std::size_t sample = 0;
  GeneratorSet generators;

  bool operator==(const SampledSymmetryRecord& other) const;
};

struct SdiRecord {
  std::string shape_id;
  EvalReport report;
  std::string symmetry_source;  // "detected" or "default-mirror"

  bool operator==(const SdiRecord& other) const;
};

Json to_json(const SymmetryRecord& r);
Json to_json(const AssemblerRecord& r);
Json to_json(const SampledSymmetryRecord& r);
Json to_json(const SdiRecord& r);
Json to_json(const EvalReport& r);

SymmetryRecord symmetry_record_from_json(const Json& j);
AssemblerRecord assembler_record_from_json(const Json& j);
SampledSymmetryRecord sampled_symmetry_record_from_json(const Json& j);
SdiRecord sdi_record_from_json(const Json& j);
EvalReport eval_report_from_json(const Json& j);

// First line of every JSONL output: {"type":"header", command, seed, config}.
Json make_header(const std::string& command, std::uint64_t seed, const Json& config);

// Writes the header then one compact JSON object per line.
void write_jsonl(const std::filesystem::path& path, const Json& header,
                 const std::vector<Json>& records);
// Non-header records in file order. Throws kParse with file:line on bad JSON.
std::vector<Json> read_jsonl(const std::filesystem::path& path);

std::vector<SymmetryRecord> read_symmetry_records(const std::filesystem::path& path);
std::vector<AssemblerRecord> read_assembler_records(const std::filesystem::path& path);

// Three orthographic projections (XY, XZ, YZ) with points colored by part.
std::string render_svg(const PointCloud& cloud, const std::string& title,
                       const std::string& comment = "");

}  // namespace quartet
