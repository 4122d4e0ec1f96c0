// quartet: command-line front end over the library.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "quartet/assembly.hpp"
#include "quartet/config.hpp"
#include "quartet/detect.hpp"
#include "quartet/error.hpp"
#include "quartet/io.hpp"
#include "quartet/metrics.hpp"
#include "quartet/parallel.hpp"
#include "quartet/rng.hpp"
#include "quartet/sampler.hpp"
#include "quartet/symgroup.hpp"

namespace fs = std::filesystem;
using namespace quartet;

namespace {

struct Context {
  std::string command;
  RunConfig config;

  // Comment block carried by every xyz and svg output.
  std::string header() const {
    return "quartet " + command + "\nseed " + std::to_string(config.seed) + "\nconfig " +
           config.to_json().dump();
  }
  Json jsonl_header() const { return make_header(command, config.seed, config.to_json()); }
};

std::string part_file(const std::string& shape, int part) {
  return shape + "_part" + std::to_string(part) + ".xyz";
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

// Records keyed by (shape, part); duplicates are rejected.
std::map<std::pair<std::string, int>, SymmetryRecord> index_records(
    const std::vector<SymmetryRecord>& records, const fs::path& source) {
  std::map<std::pair<std::string, int>, SymmetryRecord> out;
  for (const auto& r : records) {
    if (r.part < 0) throw Error(ErrorCode::kParse, source.string() + ": negative part index");
    if (!out.emplace(std::make_pair(r.shape_id, r.part), r).second) {
      throw Error(ErrorCode::kParse, source.string() + ": duplicate record for " + r.shape_id +
                                         " part " + std::to_string(r.part));
    }
  }
  return out;
}

const SymmetryRecord& find_record(
    const std::map<std::pair<std::string, int>, SymmetryRecord>& index, const std::string& shape,
    int part) {
  const auto it = index.find({shape, part});
  if (it == index.end()) {
    throw Error(ErrorCode::kPrecondition,
                "no symmetry record for " + shape + " part " + std::to_string(part));
  }
  return it->second;
}

PointCloud with_label(PointCloud cloud, int label) {
  cloud.labels.assign(cloud.size(), label);
  return cloud;
}

void append(PointCloud& into, const PointCloud& part) {
  into.points.insert(into.points.end(), part.points.begin(), part.points.end());
  into.labels.insert(into.labels.end(), part.labels.begin(), part.labels.end());
}

// ---- commands ---------------------------------------------------------------

struct DetectArgs {
  std::string in, out;
};

void run_detect(const Context& ctx, const DetectArgs& a) {
  const auto shapes = load_dataset(a.in);
  std::vector<std::vector<SymmetryRecord>> per_shape(shapes.size());
  std::vector<std::string> warnings(shapes.size());
  parallel_for(shapes.size(), [&](std::size_t k) {
    const PointCloud& shape = shapes[k].cloud;
    for (int j = 0; j < shape.part_count(); ++j) {
      const PointCloud part = shape.part(j);
      SymmetryRecord r;
      r.shape_id = shapes[k].id;
      r.part = j;
      if (part.size() < 8) {
        // too small to vote on: the whole part is its own domain
        r.domain_indices.resize(part.size());
        for (std::size_t i = 0; i < part.size(); ++i) r.domain_indices[i] = i;
        warnings[k] += "warning: " + r.shape_id + " part " + std::to_string(j) + " has " +
                       std::to_string(part.size()) + " points; detection skipped\n";
        per_shape[k].push_back(std::move(r));
        continue;
      }
      DetectConfig config = ctx.config.detect_config();
      config.seed = split_seed(split_seed(ctx.config.seed, k), static_cast<std::uint64_t>(j));
      const Detection det = detect_symmetry(part, config);
      r.generators = det.generators;
      r.found = det.found;
      r.residual = det.residual;
      DomainOptions options = ctx.config.domain_options();
      options.check_coverage = false;
      r.domain_indices =
          extract_fundamental_domain(det.generators, part, options, ctx.config.group_options())
              .indices;
      per_shape[k].push_back(std::move(r));
    }
  });
  std::vector<Json> records;
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    std::cerr << warnings[k];
    for (const auto& r : per_shape[k]) records.push_back(to_json(r));
  }
  write_jsonl(a.out, ctx.jsonl_header(), records);
}

struct FdArgs {
  std::string in, syms, out;
};

void run_fd(const Context& ctx, const FdArgs& a) {
  const auto shapes = load_dataset(a.in);
  const auto index = index_records(read_symmetry_records(a.syms), a.syms);
  for (const auto& shape : shapes) {
    for (int j = 0; j < shape.cloud.part_count(); ++j) {
      const SymmetryRecord& r = find_record(index, shape.id, j);
      const PointCloud part = shape.cloud.part(j);
      FundamentalDomain domain;
      domain.indices = r.domain_indices;
      for (std::size_t i : domain.indices) {
        if (i >= part.size()) {
          throw Error(ErrorCode::kParse, a.syms + ": domain index " + std::to_string(i) +
                                             " out of range for " + shape.id + " part " +
                                             std::to_string(j));
        }
      }
      const FlatGenerators flat = r.generators.flatten();
      const std::string header =
          ctx.header() + "\nshape " + shape.id + " part " + std::to_string(j) + "\ngenerators " +
          Json(std::vector<double>(flat.data(), flat.data() + flat.size())).dump();
      write_xyz(fs::path(a.out) / part_file(shape.id, j), select(part, domain), header);
    }
  }
}

struct ReconstructArgs {
  std::string fd, syms, out;
};

void run_reconstruct(const Context& ctx, const ReconstructArgs& a) {
  const auto records = read_symmetry_records(a.syms);
  const auto index = index_records(records, a.syms);
  std::vector<std::string> order;
  std::map<std::string, int> parts;
  for (const auto& r : records) {
    if (!parts.count(r.shape_id)) order.push_back(r.shape_id);
    parts[r.shape_id] = std::max(parts[r.shape_id], r.part + 1);
  }
  const GroupOptions group_options = ctx.config.group_options();
  std::vector<PointCloud> rebuilt(order.size());
  parallel_for(order.size(), [&](std::size_t k) {
    const std::string& id = order[k];
    const int count = parts.at(id);
    for (int j = 0; j < count; ++j) {
      const SymmetryRecord& r = find_record(index, id, j);
      const PointCloud domain = read_xyz(fs::path(a.fd) / part_file(id, j));
      append(rebuilt[k], with_label(apply_group(generate_group(r.generators, group_options), domain), j));
    }
    if (count == 1) rebuilt[k].labels.clear();
  });
  for (std::size_t k = 0; k < order.size(); ++k) {
    write_xyz(fs::path(a.out) / (order[k] + ".xyz"), rebuilt[k], ctx.header());
  }
}

struct SdiArgs {
  std::string in, syms, metric, out;
  bool default_mirror = false;
};

void run_sdi(const Context& ctx, const SdiArgs& a) {
  if (a.syms.empty() == !a.default_mirror) {
    throw Error(ErrorCode::kConfig, "sdi needs exactly one of --syms or --default-mirror");
  }
  const MetricKind kind = parse_metric(a.metric);
  const auto shapes = load_dataset(a.in);
  std::optional<std::map<std::pair<std::string, int>, SymmetryRecord>> index;
  if (!a.syms.empty()) index = index_records(read_symmetry_records(a.syms), a.syms);

  std::vector<SdiRecord> results(shapes.size());
  parallel_for(shapes.size(), [&](std::size_t k) {
    SdiOptions options = ctx.config.sdi_options();
    options.seed = split_seed(ctx.config.seed, k);
    SdiRecord& r = results[k];
    r.shape_id = shapes[k].id;
    if (index) {
      std::vector<GeneratorSet> gens;
      for (int j = 0; j < shapes[k].cloud.part_count(); ++j) {
        gens.push_back(find_record(*index, shapes[k].id, j).generators);
      }
      r.report = sdi_parts(shapes[k].cloud, gens, kind, options);
      r.symmetry_source = "detected";
    } else {
      r.report = sdi_default(shapes[k].cloud, kind, options);
      r.symmetry_source = "default-mirror";
    }
  });

  double raw = 0, scaled = 0;
  std::vector<Json> records;
  std::printf("%-24s %14s %14s\n", "shape", "raw", "scaled");
  for (const auto& r : results) {
    raw += r.report.raw;
    scaled += r.report.scaled;
    records.push_back(to_json(r));
    std::printf("%-24s %14.6g %14.6g\n", r.shape_id.c_str(), r.report.raw, r.report.scaled);
  }
  const double n = static_cast<double>(results.size());
  std::printf("%-24s %14.6g %14.6g\n", "mean", raw / n, scaled / n);
  records.push_back(Json{{"type", "sdi_summary"},
                         {"metric", std::string(metric_name(kind))},
                         {"shapes", results.size()},
                         {"mean_raw", raw / n},
                         {"mean_scaled", scaled / n}});
  if (!a.out.empty()) write_jsonl(a.out, ctx.jsonl_header(), records);
}

struct SampleArgs {
  std::string db, out;
  std::size_t n = 1;
};

void run_sample_sym(const Context& ctx, const SampleArgs& a) {
  std::vector<Vector> entries;
  for (const auto& r : read_symmetry_records(a.db)) entries.push_back(r.generators.flatten());
  if (entries.empty()) throw Error(ErrorCode::kPrecondition, a.db + " holds no symmetry records");
  const VectorDb db(std::move(entries));
  const NoiseSchedule schedule = ctx.config.noise_schedule();
  const LangevinConfig langevin = ctx.config.langevin_config();
  const GeneratorSampling sampling = ctx.config.generator_sampling();
  std::vector<SampledSymmetryRecord> samples(a.n);
  parallel_for(a.n, [&](std::size_t k) {
    Rng rng = make_rng(ctx.config.seed, k);
    samples[k] = {k, sample_generator_set(db, schedule, langevin, rng, sampling)};
  });
  std::vector<Json> records;
  for (const auto& s : samples) records.push_back(to_json(s));
  write_jsonl(a.out, ctx.jsonl_header(), records);
}

struct FitArgs {
  std::string in, canon, out;
};

void run_fit_assemblers(const Context& ctx, const FitArgs& a) {
  const auto shapes = load_dataset(a.in);
  std::vector<AssemblerRecord> fits(shapes.size());
  parallel_for(shapes.size(), [&](std::size_t k) {
    AssemblerRecord& r = fits[k];
    r.shape_id = shapes[k].id;
    for (int j = 0; j < shapes[k].cloud.part_count(); ++j) {
      const PointCloud canonical = read_xyz(fs::path(a.canon) / part_file(shapes[k].id, j));
      const AssemblerFit fit = fit_assembler(canonical, shapes[k].cloud.part(j));
      r.assemblers.push_back(fit.assembler);
      r.rms.push_back(fit.rms);
    }
  });
  std::vector<Json> records;
  for (const auto& r : fits) records.push_back(to_json(r));
  write_jsonl(a.out, ctx.jsonl_header(), records);
}

struct AssembleArgs {
  std::string parts, asm_file, out;
};

void run_assemble(const Context& ctx, const AssembleArgs& a) {
  const auto records = read_assembler_records(a.asm_file);
  std::vector<PointCloud> shapes(records.size());
  parallel_for(records.size(), [&](std::size_t k) {
    std::vector<PointCloud> parts;
    for (std::size_t j = 0; j < records[k].assemblers.size(); ++j) {
      parts.push_back(read_xyz(fs::path(a.parts) / part_file(records[k].shape_id, static_cast<int>(j))));
    }
    shapes[k] = compose_shape(parts, records[k].assemblers);
  });
  for (std::size_t k = 0; k < records.size(); ++k) {
    write_xyz(fs::path(a.out) / (records[k].shape_id + ".xyz"), shapes[k], ctx.header());
  }
}

struct DecomposeArgs {
  std::string in, out, asm_file;
};

void run_decompose(const Context& ctx, const DecomposeArgs& a) {
  const auto shapes = load_dataset(a.in);
  std::vector<Decomposition> parts(shapes.size());
  parallel_for(shapes.size(), [&](std::size_t k) { parts[k] = decompose_shape(shapes[k].cloud); });
  std::vector<Json> records;
  for (std::size_t k = 0; k < shapes.size(); ++k) {
    AssemblerRecord r;
    r.shape_id = shapes[k].id;
    r.assemblers = parts[k].assemblers;
    for (std::size_t j = 0; j < parts[k].canonical_parts.size(); ++j) {
      write_xyz(fs::path(a.out) / part_file(shapes[k].id, static_cast<int>(j)),
                parts[k].canonical_parts[j], ctx.header());
      // decomposition is exact up to rounding
      const PointCloud placed = apply_assembler(r.assemblers[j], parts[k].canonical_parts[j]);
      const PointCloud original = shapes[k].cloud.part(static_cast<int>(j));
      double sq = 0;
      for (std::size_t i = 0; i < placed.size(); ++i) sq += (placed.points[i] - original.points[i]).squaredNorm();
      r.rms.push_back(std::sqrt(sq / static_cast<double>(placed.size())));
    }
    records.push_back(to_json(r));
  }
  if (!a.asm_file.empty()) write_jsonl(a.asm_file, ctx.jsonl_header(), records);
}

struct PreprocessArgs {
  std::string in, out;
  std::vector<std::size_t> targets;
};

void run_preprocess(const Context& ctx, const PreprocessArgs& a) {
  const auto shapes = load_dataset(a.in);
  std::optional<std::vector<std::size_t>> targets;
  if (!a.targets.empty()) targets = a.targets;
  const PreprocessResult result = preprocess(shapes, ctx.config.seed, targets);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  std::string header = ctx.header() + "\ntargets";
  for (std::size_t t : result.targets) header += " " + std::to_string(t);
  save_dataset(a.out, result.shapes, header);
}

struct OneNnaArgs {
  std::string gen, ref, metric, out;
};

void run_one_nna(const Context& ctx, const OneNnaArgs& a) {
  const MetricKind kind = parse_metric(a.metric);
  std::vector<PointCloud> gen, ref;
  for (auto& s : load_dataset(a.gen)) gen.push_back(std::move(s.cloud));
  for (auto& s : load_dataset(a.ref)) ref.push_back(std::move(s.cloud));
  const double percent = one_nna(gen, ref, kind, ctx.config.emd_options());
  std::printf("1-NNA-%s %.4f\n", std::string(metric_name(kind)).c_str(), percent);
  if (!a.out.empty()) {
    write_jsonl(a.out, ctx.jsonl_header(),
                {Json{{"type", "one_nna"},
                      {"metric", std::string(metric_name(kind))},
                      {"generated", gen.size()},
                      {"reference", ref.size()},
                      {"percent", percent}}});
  }
}

struct PlotArgs {
  std::string in, out, title;
};

void run_plot(const Context& ctx, const PlotArgs& a) {
  const PointCloud cloud = read_xyz(a.in);
  const std::string title = a.title.empty() ? fs::path(a.in).stem().string() : a.title;
  write_text(a.out, render_svg(cloud, title, ctx.header()));
}

std::string one_line(std::string text) {
  for (char& c : text) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quartet: symmetry detection, sampling, assembly and evaluation on point clouds"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "run configuration file (key = value lines)")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "root seed; overrides the config file");

  DetectArgs detect;
  auto* detect_cmd = app.add_subcommand("detect", "detect reflection groups per shape and part");
  detect_cmd->add_option("--in", detect.in, "dataset directory")->required();
  detect_cmd->add_option("--out", detect.out, "symmetry records (JSONL)")->required();

  FdArgs fd;
  auto* fd_cmd = app.add_subcommand("fd", "write fundamental-domain clouds");
  fd_cmd->add_option("--in", fd.in, "dataset directory")->required();
  fd_cmd->add_option("--syms", fd.syms, "symmetry records (JSONL)")->required();
  fd_cmd->add_option("--out", fd.out, "output directory")->required();

  ReconstructArgs rec;
  auto* rec_cmd = app.add_subcommand("reconstruct", "rebuild shapes from their fundamental domains");
  rec_cmd->add_option("--fd", rec.fd, "fundamental-domain directory")->required();
  rec_cmd->add_option("--syms", rec.syms, "symmetry records (JSONL)")->required();
  rec_cmd->add_option("--out", rec.out, "output directory")->required();

  SdiArgs sdi_args;
  auto* sdi_cmd = app.add_subcommand("sdi", "symmetry discrepancy index per shape");
  sdi_cmd->add_option("--in", sdi_args.in, "dataset directory")->required();
  auto* syms_opt = sdi_cmd->add_option("--syms", sdi_args.syms, "symmetry records (JSONL)");
  sdi_cmd->add_flag("--default-mirror", sdi_args.default_mirror, "use the x = 0 mirror of each normalized shape")
      ->excludes(syms_opt);
  sdi_cmd->add_option("--metric", sdi_args.metric, "cd or emd")->required();
  sdi_cmd->add_option("--out", sdi_args.out, "optional report file (JSONL)");

  SampleArgs sample;
  auto* sample_cmd = app.add_subcommand("sample-sym", "sample generator sets by annealed Langevin dynamics");
  sample_cmd->add_option("--db", sample.db, "symmetry records (JSONL)")->required();
  sample_cmd->add_option("--n", sample.n, "number of samples")->required()->check(CLI::PositiveNumber);
  sample_cmd->add_option("--out", sample.out, "sampled generator sets (JSONL)")->required();

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit-assemblers", "fit per-part assemblers");
  fit_cmd->add_option("--in", fit.in, "dataset directory (labeled shapes)")->required();
  fit_cmd->add_option("--canon", fit.canon, "canonical parts directory")->required();
  fit_cmd->add_option("--out", fit.out, "assembler records (JSONL)")->required();

  AssembleArgs assemble;
  auto* assemble_cmd = app.add_subcommand("assemble", "compose shapes from parts and assemblers");
  assemble_cmd->add_option("--parts", assemble.parts, "canonical parts directory")->required();
  assemble_cmd->add_option("--asm", assemble.asm_file, "assembler records (JSONL)")->required();
  assemble_cmd->add_option("--out", assemble.out, "output directory")->required();

  DecomposeArgs decompose;
  auto* decompose_cmd = app.add_subcommand("decompose", "split labeled shapes into canonical parts");
  decompose_cmd->add_option("--in", decompose.in, "dataset directory (labeled shapes)")->required();
  decompose_cmd->add_option("--out", decompose.out, "canonical parts directory")->required();
  decompose_cmd->add_option("--asm", decompose.asm_file, "optional assembler records (JSONL)");

  PreprocessArgs prep;
  auto* prep_cmd = app.add_subcommand("preprocess", "resample every part to a common size");
  prep_cmd->add_option("--in", prep.in, "dataset directory")->required();
  prep_cmd->add_option("--out", prep.out, "output directory")->required();
  prep_cmd->add_option("--targets", prep.targets, "per-part point counts (default: rounded means)")
      ->delimiter(',');

  OneNnaArgs nna;
  auto* nna_cmd = app.add_subcommand("eval-1nna", "1-nearest-neighbour accuracy between two sets");
  nna_cmd->add_option("--gen", nna.gen, "generated shapes directory")->required();
  nna_cmd->add_option("--ref", nna.ref, "reference shapes directory")->required();
  nna_cmd->add_option("--metric", nna.metric, "cd or emd")->required();
  nna_cmd->add_option("--out", nna.out, "optional result file (JSONL)");

  PlotArgs plot;
  auto* plot_cmd = app.add_subcommand("plot", "render three orthographic projections as SVG");
  plot_cmd->add_option("--in", plot.in, "xyz file")->required();
  plot_cmd->add_option("--out", plot.out, "svg file")->required();
  plot_cmd->add_option("--title", plot.title, "plot title (default: file stem)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: usage: %s\n", one_line(e.what()).c_str());
    return 2;
  }

  try {
    Context ctx;
    ctx.command = app.get_subcommands().front()->get_name();
    if (!config_path.empty()) ctx.config = load_run_config(config_path);
    if (seed) ctx.config.seed = *seed;
    ctx.config.validate();

    if (*detect_cmd) run_detect(ctx, detect);
    else if (*fd_cmd) run_fd(ctx, fd);
    else if (*rec_cmd) run_reconstruct(ctx, rec);
    else if (*sdi_cmd) run_sdi(ctx, sdi_args);
    else if (*sample_cmd) run_sample_sym(ctx, sample);
    else if (*fit_cmd) run_fit_assemblers(ctx, fit);
    else if (*assemble_cmd) run_assemble(ctx, assemble);
    else if (*decompose_cmd) run_decompose(ctx, decompose);
    else if (*prep_cmd) run_preprocess(ctx, prep);
    else if (*nna_cmd) run_one_nna(ctx, nna);
    else if (*plot_cmd) run_plot(ctx, plot);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", std::string(error_code_name(e.code())).c_str(),
                 one_line(e.what()).c_str());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", one_line(e.what()).c_str());
    return 1;
  }
  return 0;
}
