#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <unistd.h>

#include "doctest.h"
#include "fixtures.hpp"
#include "quartet/config.hpp"
#include "quartet/error.hpp"
#include "quartet/io.hpp"

using namespace quartet;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kPrecondition;
}

std::string message_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("quartet_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

PointCloud labeled(const std::vector<std::size_t>& sizes, Rng& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  PointCloud c;
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    for (std::size_t i = 0; i < sizes[j]; ++i) {
      c.points.emplace_back(u(rng) + 3.0 * j, u(rng), u(rng));
      c.labels.push_back(static_cast<int>(j));
    }
  }
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("parse_xyz") {
  const PointCloud c = parse_xyz("0 0 0\n1 2 3\n-1.5 2e-3 4\n");
  REQUIRE(c.size() == 3);
  CHECK_FALSE(c.has_labels());
  CHECK(c.points[2] == Point3(-1.5, 2e-3, 4));

  const PointCloud l = parse_xyz("# comment\n\n0 0 0 1\n1 1 1 0\n");
  REQUIRE(l.size() == 2);
  CHECK(l.labels == std::vector<int>{1, 0});

  CHECK(code_of([] { parse_xyz("0 0 0\n1 2\n"); }) == ErrorCode::kParse);
  CHECK(message_of([] { parse_xyz("0 0 0\n1 2\n", "shape.xyz"); }).find("shape.xyz:2") != std::string::npos);
  CHECK(code_of([] { parse_xyz("0 0 0\n1 2 3 0\n"); }) == ErrorCode::kParse);   // column count changes
  CHECK(code_of([] { parse_xyz("0 0 0 -1\n"); }) == ErrorCode::kParse);         // negative label
  CHECK(code_of([] { parse_xyz("0 0 0 1.5\n"); }) == ErrorCode::kParse);        // fractional label
  CHECK(code_of([] { parse_xyz("0 0 x\n"); }) == ErrorCode::kParse);
  CHECK(code_of([] { parse_xyz("0 0 0 0 0\n"); }) == ErrorCode::kParse);
  CHECK(code_of([] { parse_xyz("0 0 0 1\n"); }) == ErrorCode::kParse);          // labels must start at 0
  CHECK(code_of([] { parse_xyz("# nothing\n"); }) == ErrorCode::kParse);
}

TEST_CASE("xyz round trip") {
  Rng rng(1);
  std::normal_distribution<double> g(0, 1e3);
  PointCloud c;
  for (int i = 0; i < 200; ++i) {
    c.points.emplace_back(g(rng), g(rng) * 1e-9, g(rng));
    c.labels.push_back(i % 3);
  }
  const std::string text = format_xyz(c, "seed 7\nsecond line");
  CHECK(text.rfind("# seed 7\n# second line\n", 0) == 0);
  const PointCloud back = parse_xyz(text);
  REQUIRE(back.size() == c.size());
  CHECK(back.labels == c.labels);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK((back.points[i] - c.points[i]).norm() <= 1e-12 * (1 + c.points[i].norm()));
  // exact in fact: 17 significant digits round-trip doubles
  CHECK(back.points == c.points);
  CHECK(format_xyz(back, "seed 7\nsecond line") == text);
}

TEST_CASE("datasets on disk") {
  TempDir dir;
  CHECK(code_of([&] { load_dataset(dir.path); }) == ErrorCode::kIo);
  CHECK(code_of([&] { load_dataset(dir.path / "missing"); }) == ErrorCode::kIo);

  Rng rng(2);
  std::vector<NamedCloud> shapes{{"b_shape", labeled({4, 5}, rng)}, {"a_shape", labeled({3, 3}, rng)}};
  save_dataset(dir.path, shapes, "made by a test");
  std::ofstream(dir.path / "notes.txt") << "ignored\n";
  const auto loaded = load_dataset(dir.path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].id == "a_shape");
  CHECK(loaded[1].id == "b_shape");
  CHECK(loaded[1].cloud.points == shapes[0].cloud.points);
  CHECK(loaded[1].cloud.labels == shapes[0].cloud.labels);

  std::ofstream(dir.path / "c_bad.xyz") << "0 0 0\n1 2\n";
  const std::string msg = message_of([&] { load_dataset(dir.path); });
  CHECK(msg.find("c_bad.xyz:2") != std::string::npos);
  CHECK(code_of([&] { read_xyz(dir.path / "none.xyz"); }) == ErrorCode::kIo);
}

TEST_CASE("preprocess") {
  Rng rng(3);
  const std::vector<NamedCloud> same{{"a", labeled({5, 7}, rng)}, {"b", labeled({5, 7}, rng)}};
  const PreprocessResult unchanged = preprocess(same, 0);
  CHECK(unchanged.targets == std::vector<std::size_t>{5, 7});
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(unchanged.shapes[k].cloud.labels == same[k].cloud.labels);
    CHECK(dedup_points(unchanged.shapes[k].cloud).size() == same[k].cloud.size());
  }

  const std::vector<NamedCloud> batch{{"a", labeled({10, 4}, rng)}, {"b", labeled({20, 7}, rng)}};
  const PreprocessResult r = preprocess(batch, 11);
  CHECK(r.targets == std::vector<std::size_t>{15, 6});  // 5.5 rounds to 6
  for (const auto& s : r.shapes) {
    CHECK(s.cloud.size() == 21);
    CHECK(s.cloud.part(0).size() == 15);
    CHECK(s.cloud.part(1).size() == 6);
  }
  CHECK(r.warnings.empty());

  const PreprocessResult again = preprocess(batch, 11);
  CHECK(again.shapes[0].cloud.points == r.shapes[0].cloud.points);
  CHECK(again.shapes[1].cloud.points == r.shapes[1].cloud.points);

  const PreprocessResult fixed = preprocess(batch, 11, std::vector<std::size_t>{8, 8});
  CHECK(fixed.shapes[0].cloud.size() == 16);
  CHECK(code_of([&] { preprocess(batch, 11, std::vector<std::size_t>{8}); }) == ErrorCode::kPrecondition);

  // a shape lacking part 1 is skipped, not padded
  const std::vector<NamedCloud> gap{{"full", labeled({6, 6}, rng)}, {"armless", labeled({6}, rng)}};
  const PreprocessResult skipped = preprocess(gap, 0);
  REQUIRE(skipped.shapes.size() == 1);
  CHECK(skipped.shapes[0].id == "full");
  REQUIRE(skipped.warnings.size() == 1);
  CHECK(skipped.warnings[0].find("armless") != std::string::npos);
}

TEST_CASE("JSONL records round trip") {
  TempDir dir;
  SymmetryRecord s;
  s.shape_id = "chair_01";
  s.part = 2;
  s.generators = GeneratorSet({ReflectionPlane(Vector3(0.1, 0.2, 0.97), -0.123456789012345),
                               ReflectionPlane(Vector3::UnitX(), 1.0 / 3.0)});
  s.domain_indices = {0, 5, 9};
  s.residual = 1.0 / 7.0;
  s.found = true;
  CHECK(symmetry_record_from_json(to_json(s)) == s);
  CHECK(symmetry_record_from_json(Json::parse(to_json(s).dump())) == s);
  CHECK(to_json(s)["generators"].size() == 12);

  AssemblerRecord a;
  a.shape_id = "chair_01";
  a.assemblers = {Assembler{}, Assembler{}};
  a.assemblers[1].translation = Vector3(0.1, -2, 3);
  a.assemblers[1].euler = Vector3(0.5, -0.25, 3.0);
  a.rms = {1e-17, 0.5};
  CHECK(assembler_record_from_json(Json::parse(to_json(a).dump())) == a);
  CHECK(to_json(a)["assemblers"].size() == 18);

  const SampledSymmetryRecord ss{4, s.generators};
  CHECK(sampled_symmetry_record_from_json(Json::parse(to_json(ss).dump())) == ss);

  SdiRecord d;
  d.shape_id = "x";
  d.symmetry_source = "detected";
  d.report.kind = MetricKind::kEarthMovers;
  d.report.raw = 0.0123;
  d.report.factor = 1000;
  d.report.scaled = 12.3;
  CHECK(sdi_record_from_json(Json::parse(to_json(d).dump())) == d);
  CHECK(to_json(d.report)["chamfer_variant"] == std::string(kChamferVariant));

  const fs::path file = dir.path / "syms.jsonl";
  write_jsonl(file, make_header("detect", 5, RunConfig{}.to_json()), {to_json(s), to_json(s)});
  const std::string text = slurp(file);
  CHECK(Json::parse(text.substr(0, text.find('\n')))["type"] == "header");
  CHECK(Json::parse(text.substr(0, text.find('\n')))["seed"] == 5);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  const auto records = read_symmetry_records(file);
  REQUIRE(records.size() == 2);
  CHECK(records[1] == s);

  std::ofstream(dir.path / "bad.jsonl") << "{\"type\":\"header\"}\n\n{not json\n";
  const std::string msg = message_of([&] { read_jsonl(dir.path / "bad.jsonl"); });
  CHECK(msg.find("bad.jsonl:3") != std::string::npos);
  CHECK(code_of([&] { read_jsonl(dir.path / "bad.jsonl"); }) == ErrorCode::kParse);
  CHECK(code_of([&] { symmetry_record_from_json(Json{{"type", "symmetry"}}); }) == ErrorCode::kParse);
  CHECK(code_of([&] { read_jsonl(dir.path / "absent.jsonl"); }) == ErrorCode::kIo);
}

TEST_CASE("run config") {
  const RunConfig defaults = parse_run_config("");
  CHECK(defaults.seed == 0);
  CHECK(defaults.bandwidth == DetectConfig{}.density.bandwidth);
  CHECK(defaults.detect_config().top_k == DetectConfig{}.top_k);

  const RunConfig c = parse_run_config(
      "# detection\nseed = 42\nbandwidth=0.1  # narrower\n\nemd_approximate = true\n"
      "neighborhood_radius = inf\ntau = 20\n");
  CHECK(c.seed == 42);
  CHECK(c.bandwidth == 0.1);
  CHECK(c.emd_approximate);
  CHECK(std::isinf(c.neighborhood_radius));
  CHECK(c.noise_schedule().tau() == 20);
  CHECK(c.detect_config().density.bandwidth == 0.1);
  CHECK(c.emd_options().approximate);
  CHECK(c.to_json()["neighborhood_radius"] == "inf");
  CHECK(c.to_json()["seed"] == 42);

  CHECK(code_of([] { parse_run_config("colour = blue\n"); }) == ErrorCode::kConfig);
  CHECK(message_of([] { parse_run_config("seed = 1\nfoo = 2\n", "run.cfg"); }).find("run.cfg:2") !=
        std::string::npos);
  CHECK(code_of([] { parse_run_config("seed 3\n"); }) == ErrorCode::kConfig);
  CHECK(code_of([] { parse_run_config("seed = -3\n"); }) == ErrorCode::kConfig);
  CHECK(code_of([] { parse_run_config("bandwidth = 0\n"); }) == ErrorCode::kConfig);
  CHECK(code_of([] { parse_run_config("top_k = 2.5\n"); }) == ErrorCode::kConfig);
  CHECK(code_of([] { parse_run_config("emd_approximate = maybe\n"); }) == ErrorCode::kConfig);
  CHECK(code_of([] { load_run_config("/nonexistent/run.cfg"); }) == ErrorCode::kIo);
}

TEST_CASE("svg output") {
  Rng rng(4);
  const PointCloud c = labeled({5, 5}, rng);
  const std::string svg = render_svg(c, "a <shape> & more", "made -- here");
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("a &lt;shape&gt; &amp; more") != std::string::npos);
  CHECK(svg.find("made -- here") == std::string::npos);
  std::size_t circles = 0;
  for (std::size_t pos = svg.find("<circle"); pos != std::string::npos; pos = svg.find("<circle", pos + 1)) ++circles;
  CHECK(circles == 3 * c.size());
}
