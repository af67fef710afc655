#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include "tomo/dataset.hpp"
#include "tomo/error.hpp"
#include "tomo/forward.hpp"
#include "tomo/image.hpp"
#include "tomo/mesh.hpp"
#include "tomo/metrics.hpp"
#include "tomo/phantom.hpp"
#include "tomo/recon.hpp"
#include "tomo/sensitivity.hpp"

namespace tomo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kGridGap = 4;

struct Globals {
  bool quiet = false;
  unsigned threads = 0;
  std::optional<std::uint64_t> seed;
};

struct Io {
  std::ostream& out;
  std::ostream& err;
  const Globals& globals;

  void note(const std::string& message) const {
    if (!globals.quiet) err << message << '\n';
  }
};

// Runtime failure tagged with the pipeline stage that raised it.
struct StageError {
  std::string stage;
  std::string message;
  bool usage = false;
};

std::string format_value(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

DriveScheme parse_scheme(const std::string& name) {
  if (name == "adjacent") return DriveScheme::adjacent;
  if (name == "opposite") return DriveScheme::opposite;
  throw ConfigError("unknown protocol \"" + name + "\" (expected adjacent or opposite)");
}

std::vector<Algorithm> parse_algorithms(const std::string& list) {
  std::vector<Algorithm> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_algorithm(item));
  }
  if (out.empty()) throw ConfigError("no algorithms given");
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

// Conductivity field files are {"sigma": [...]}.
ConductivityField read_field(const fs::path& path) {
  try {
    const json j = json::parse(read_text(path));
    return {j.at("sigma").get<std::vector<double>>()};
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_field(const ConductivityField& field, const fs::path& path) {
  write_text(path, json{{"sigma", field.sigma}}.dump() + "\n");
}

// ---------------------------------------------------------------- mesh

struct MeshArgs {
  int rings = 16;
  int electrodes = 32;
  double coverage = 0.5;
  std::string out;
};

void cmd_mesh(const MeshArgs& a, const Io& io) {
  const DiscMesh mesh = build_disc_mesh(a.rings, a.electrodes, a.coverage);
  write_mesh(mesh, a.out);
  io.out << json{{"nodes", mesh.node_count()},
                 {"triangles", mesh.triangle_count()},
                 {"electrodes", mesh.n_electrodes()},
                 {"out", a.out}}
                .dump()
         << '\n';
}

// ------------------------------------------------------------- phantom

struct PhantomArgs {
  PhantomConfig config;
  std::string out;
  std::string render_in, render_out;
  std::size_t render_size = kImageSize;
  std::string sigma_in, sigma_mesh, sigma_out;
};

void cmd_phantom_sample(const PhantomArgs& a, const Io& io) {
  const std::uint64_t seed = io.globals.seed.value_or(0);
  const PhantomSpec spec = sample_phantom(seed, a.config);
  if (a.out.empty()) {
    io.out << phantom_to_json(spec);
  } else {
    write_phantom(spec, a.out);
    io.note("wrote phantom with " + std::to_string(spec.inclusions.size()) + " inclusion(s) to " + a.out);
  }
}

void cmd_phantom_render(const PhantomArgs& a, const Io& io) {
  const PhantomSpec spec = read_phantom(a.render_in);
  write_png(phantom_to_image(spec, a.render_size, a.render_size), a.render_out);
  io.note("wrote " + a.render_out);
}

void cmd_phantom_sigma(const PhantomArgs& a, const Io& io) {
  const PhantomSpec spec = read_phantom(a.sigma_in);
  const DiscMesh mesh = read_mesh(a.sigma_mesh);
  write_field(phantom_to_sigma(mesh, spec), a.sigma_out);
  io.note("wrote " + a.sigma_out);
}

// ------------------------------------------------------------ simulate

struct SimulateArgs {
  std::string mesh, sigma, phantom, protocol = "adjacent", out;
  double amplitude = 1.0;
};

void cmd_simulate(const SimulateArgs& a, const Io& io) {
  const DiscMesh mesh = read_mesh(a.mesh);
  ConductivityField field;
  if (!a.sigma.empty()) {
    field = read_field(a.sigma);
  } else if (!a.phantom.empty()) {
    field = phantom_to_sigma(mesh, read_phantom(a.phantom));
  } else {
    throw ConfigError("one of --sigma or --phantom is required");
  }
  const auto protocol = MeasurementProtocol::make(parse_scheme(a.protocol), mesh.n_electrodes(), a.amplitude);
  const VoltageFrame frame = simulate_frame(mesh, field, protocol);
  write_frame(frame, a.out);
  io.out << json{{"measurements", frame.values.size()}, {"protocol", protocol.tag()}, {"out", a.out}}.dump()
         << '\n';
}

// --------------------------------------------------------- sensitivity

struct SensitivityArgs {
  std::string mesh, protocol = "adjacent", out;
  double background = 1.0;
};

void cmd_sensitivity(const SensitivityArgs& a, const Io& io) {
  const DiscMesh mesh = read_mesh(a.mesh);
  const auto protocol = MeasurementProtocol::make(parse_scheme(a.protocol), mesh.n_electrodes());
  const SensitivityMatrix s = compute_sensitivity(mesh, a.background, protocol, io.globals.threads);
  write_sensitivity(s, a.out);
  io.out << json{{"rows", s.rows()}, {"cols", s.cols()}, {"background", s.background}, {"out", a.out}}.dump()
         << '\n';
}

// --------------------------------------------------------- reconstruct

struct ReconstructArgs {
  std::string algo = "landweber";
  int iters = 200;
  std::optional<double> step, lambda;
  bool binarize = false;
  bool no_clamp = false;
  std::string frame, reference, sens, mesh, protocol = "adjacent", out;
  double background = 1.0;
  bool no_cache = false;
};

void cmd_reconstruct(const ReconstructArgs& a, const Io& io) {
  const DiscMesh mesh = read_mesh(a.mesh);
  const auto protocol = MeasurementProtocol::make(parse_scheme(a.protocol), mesh.n_electrodes());

  SensitivityMatrix s;
  if (!a.sens.empty()) {
    s = read_sensitivity(a.sens);
    s.protocol_tag = protocol.tag();
  } else {
    const auto cache = a.no_cache ? std::nullopt : default_cache_dir();
    s = cached_sensitivity(mesh, a.background, protocol, cache, io.globals.threads);
  }
  if (static_cast<std::size_t>(s.cols()) != mesh.triangle_count()) {
    throw ShapeError("sensitivity matrix has " + std::to_string(s.cols()) + " columns but the mesh has " +
                     std::to_string(mesh.triangle_count()) + " triangles");
  }

  VoltageFrame measured = read_frame(a.frame);
  measured.protocol_tag = protocol.tag();
  VoltageFrame reference;
  if (!a.reference.empty()) {
    reference = read_frame(a.reference);
    reference.protocol_tag = protocol.tag();
  } else {
    reference = simulate_frame(mesh, ConductivityField::uniform(mesh.triangle_count(), s.background), protocol);
  }
  const NormalizedFrame u = normalize_frame(measured, reference);

  ReconConfig config;
  config.algorithm = parse_algorithm(a.algo);
  config.iterations = a.iters;
  config.step_size = a.step;
  config.lambda = a.lambda;
  config.binarize = a.binarize;
  config.clamp = !a.no_clamp;
  const ElementImage g = reconstruct(u, s, config);
  write_png(rasterize(mesh, g), a.out);
  io.out << json{{"algorithm", a.algo}, {"elements", g.g.size()}, {"out", a.out}}.dump() << '\n';
}

// ------------------------------------------------------------- dataset

struct DatasetArgs {
  std::size_t count = 1;
  std::string algos = "lbp,landweber,tikhonov";
  double test_fraction = 0.3;
  std::string out_dir;
  int rings = 16;
  int electrodes = 32;
  std::string protocol = "adjacent";
  int iters = 200;
  std::optional<double> lambda;
  bool binarize = false;
  bool no_cache = false;
  std::string hash_dir;
};

void cmd_dataset_gen(const DatasetArgs& a, const Io& io) {
  GenerationConfig config;
  config.count = a.count;
  config.algorithms = parse_algorithms(a.algos);
  config.base_seed = io.globals.seed.value_or(42);
  config.test_fraction = a.test_fraction;
  config.n_rings = a.rings;
  config.n_electrodes = a.electrodes;
  config.scheme = parse_scheme(a.protocol);
  config.landweber_iterations = a.iters;
  config.tikhonov_lambda = a.lambda;
  config.tikhonov_binarize = a.binarize;
  config.threads = io.globals.threads;
  if (!a.no_cache) config.cache_dir = default_cache_dir();

  const DatasetManifest manifest = generate_dataset(config, a.out_dir);
  std::size_t test = 0;
  for (const auto& r : manifest.records) test += r.split == Split::test;
  io.note("generated " + std::to_string(config.count) + " phantom(s), " + std::to_string(manifest.records.size()) +
          " record(s) in " + a.out_dir);
  io.out << json{{"phantoms", config.count},
                 {"records", manifest.records.size()},
                 {"test_records", test},
                 {"manifest", (fs::path(a.out_dir) / "manifest.jsonl").string()}}
                .dump()
         << '\n';
}

void cmd_dataset_hash(const DatasetArgs& a, const Io& io) { io.out << corpus_hash(a.hash_dir) << '\n'; }

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string pred, truth;
  std::string metrics = "rmse,ssim,psnr";
  double peak = 1.0;
  std::string manifest, split = "test", out, enhanced_dir;
};

std::vector<std::string> parse_metric_names(const std::string& list) {
  std::vector<std::string> names;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (item != "rmse" && item != "ssim" && item != "psnr") {
      throw ConfigError("unknown metric \"" + item + "\" (expected rmse, ssim or psnr)");
    }
    names.push_back(item);
  }
  if (names.empty()) throw ConfigError("no metrics given");
  return names;
}

double pick(const MetricReport& r, const std::string& name) {
  if (name == "rmse") return r.rmse;
  if (name == "ssim") return r.ssim;
  return r.psnr;
}

std::string column_name(const std::string& metric) { return metric == "psnr" ? "psnr_db" : metric; }

void cmd_eval(const EvalArgs& a, const Io& io) {
  const auto names = parse_metric_names(a.metrics);
  if (a.manifest.empty()) {
    if (a.pred.empty() || a.truth.empty()) throw ConfigError("--pred and --truth are required without --manifest");
    const MetricReport r = evaluate(read_png(a.truth), read_png(a.pred), a.peak);
    std::string line;
    for (std::size_t i = 0; i < names.size(); ++i) line += (i ? "," : "") + format_value(pick(r, names[i]));
    io.out << line << '\n';
    return;
  }

  const fs::path manifest_path(a.manifest);
  const fs::path base = manifest_path.parent_path();
  const DatasetManifest manifest = read_manifest(manifest_path);
  const bool all = a.split == "all";
  const Split wanted = all ? Split::test : parse_split(a.split);
  const bool enhanced = !a.enhanced_dir.empty();

  std::ostringstream csv;
  csv << "id,phantom_id,algorithm,split";
  for (const auto& n : names) csv << ',' << column_name(n);
  if (enhanced) {
    for (const auto& n : names) csv << ",enhanced_" << column_name(n);
  }
  csv << '\n';

  std::vector<double> sums(names.size() * (enhanced ? 2 : 1), 0.0);
  std::size_t rows = 0;
  for (const auto& r : manifest.records) {
    if (!all && r.split != wanted) continue;
    const GrayImage truth = read_png(base / r.target_image);
    const MetricReport base_report = evaluate(truth, read_png(base / r.input_image), a.peak);
    csv << r.id << ',' << r.phantom_id << ',' << to_string(r.algorithm) << ',' << to_string(r.split);
    for (std::size_t i = 0; i < names.size(); ++i) {
      const double v = pick(base_report, names[i]);
      sums[i] += v;
      csv << ',' << format_value(v);
    }
    if (enhanced) {
      const fs::path path = fs::path(a.enhanced_dir) / fs::path(r.input_image).filename();
      const MetricReport e = evaluate(truth, read_png(path), a.peak);
      for (std::size_t i = 0; i < names.size(); ++i) {
        const double v = pick(e, names[i]);
        sums[names.size() + i] += v;
        csv << ',' << format_value(v);
      }
    }
    csv << '\n';
    ++rows;
  }
  if (rows == 0) throw ConfigError("manifest has no records in split \"" + a.split + "\"");
  csv << "mean,,," << a.split;
  for (double s : sums) csv << ',' << format_value(s / static_cast<double>(rows));
  csv << '\n';

  if (a.out.empty()) {
    io.out << csv.str();
  } else {
    write_text(a.out, csv.str());
    io.note("wrote " + std::to_string(rows) + " row(s) to " + a.out);
  }
}

// ------------------------------------------------------------- compare

struct CompareArgs {
  std::string manifest;
  std::vector<std::size_t> ids;
  std::string algos;
  std::vector<std::string> enhanced_dirs;
  std::string out;
};

void paste(GrayImage& grid, const GrayImage& tile, std::size_t row, std::size_t col) {
  const std::size_t y0 = row * (tile.rows() + kGridGap);
  const std::size_t x0 = col * (tile.cols() + kGridGap);
  for (std::size_t r = 0; r < tile.rows(); ++r) {
    for (std::size_t c = 0; c < tile.cols(); ++c) grid(y0 + r, x0 + c) = tile(r, c);
  }
}

void cmd_compare(const CompareArgs& a, const Io& io) {
  const fs::path manifest_path(a.manifest);
  const fs::path base = manifest_path.parent_path();
  const DatasetManifest manifest = read_manifest(manifest_path);
  if (a.ids.empty()) throw ConfigError("--ids must name at least one phantom");

  std::vector<Algorithm> algorithms;
  if (!a.algos.empty()) {
    algorithms = parse_algorithms(a.algos);
  } else {
    for (const auto& r : manifest.records) {
      if (std::find(algorithms.begin(), algorithms.end(), r.algorithm) == algorithms.end()) {
        algorithms.push_back(r.algorithm);
      }
    }
  }

  std::map<std::pair<std::size_t, Algorithm>, const DatasetRecord*> index;
  for (const auto& r : manifest.records) index[{r.phantom_id, r.algorithm}] = &r;
  auto record_for = [&](std::size_t id, Algorithm algorithm) -> const DatasetRecord& {
    const auto it = index.find({id, algorithm});
    if (it == index.end()) {
      throw ConfigError("manifest has no " + std::string(to_string(algorithm)) + " record for phantom " +
                        std::to_string(id));
    }
    return *it->second;
  };

  // rows[k][c] is the tile path for grid row k, column c.
  std::vector<std::vector<fs::path>> rows;
  std::vector<fs::path> truth_row;
  for (auto id : a.ids) truth_row.push_back(base / record_for(id, algorithms.front()).target_image);
  rows.push_back(truth_row);
  for (auto algorithm : algorithms) {
    std::vector<fs::path> row;
    for (auto id : a.ids) row.push_back(base / record_for(id, algorithm).input_image);
    rows.push_back(row);
  }
  for (const auto& dir : a.enhanced_dirs) {
    for (auto algorithm : algorithms) {
      std::vector<fs::path> row;
      for (auto id : a.ids) row.push_back(fs::path(dir) / fs::path(record_for(id, algorithm).input_image).filename());
      const bool present = std::all_of(row.begin(), row.end(), [](const fs::path& p) { return fs::exists(p); });
      if (present) {
        rows.push_back(row);
      } else {
        io.note("skipping " + std::string(to_string(algorithm)) + " row for " + dir + ": enhanced images missing");
      }
    }
  }

  const GrayImage first = read_png(rows.front().front());
  const std::size_t th = first.rows(), tw = first.cols();
  const std::size_t n_rows = rows.size(), n_cols = a.ids.size();
  GrayImage grid(n_rows * th + (n_rows - 1) * kGridGap, n_cols * tw + (n_cols - 1) * kGridGap, 1.0);
  for (std::size_t r = 0; r < n_rows; ++r) {
    for (std::size_t c = 0; c < n_cols; ++c) {
      const GrayImage tile = read_png(rows[r][c]);
      if (tile.rows() != th || tile.cols() != tw) {
        throw ShapeError(rows[r][c].string() + " is " + std::to_string(tile.rows()) + "x" +
                         std::to_string(tile.cols()) + ", expected " + std::to_string(th) + "x" +
                         std::to_string(tw));
      }
      paste(grid, tile, r, c);
    }
  }
  write_png(grid, a.out);
  io.out << json{{"rows", n_rows}, {"cols", n_cols}, {"width", grid.cols()}, {"height", grid.rows()}, {"out", a.out}}
                .dump()
         << '\n';
}

template <class F>
void stage(const std::string& name, F&& body) {
  try {
    body();
  } catch (const ConfigError& e) {
    throw StageError{name, e.what(), true};
  } catch (const std::exception& e) {
    throw StageError{name, e.what(), false};
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Globals globals;
  CLI::App app{"Electrical resistance tomography simulation, reconstruction and dataset toolkit", "tomo"};
  app.fallthrough();
  app.require_subcommand(1);
  app.add_flag("-q,--quiet", globals.quiet, "Suppress diagnostics on stderr");
  app.add_option("--threads", globals.threads, "Worker threads (0 = all hardware threads)")->capture_default_str();
  app.add_option("--seed", globals.seed, "Random seed (phantom default 0, dataset default 42)");

  MeshArgs mesh_args;
  auto* mesh = app.add_subcommand("mesh", "Build the structured disc mesh");
  mesh->add_option("--rings", mesh_args.rings, "Number of rings")->capture_default_str();
  mesh->add_option("--electrodes", mesh_args.electrodes, "Number of electrodes")->capture_default_str();
  mesh->add_option("--coverage", mesh_args.coverage, "Fraction of each electrode pitch covered by metal")
      ->capture_default_str();
  mesh->add_option("--out", mesh_args.out, "Output .tmsh file")->required();

  PhantomArgs ph;
  auto* phantom = app.add_subcommand("phantom", "Sample a phantom (uses --seed), or render / map one");
  phantom->require_subcommand(0, 1);
  phantom->add_option("--out", ph.out, "Output JSON file (stdout when omitted)");
  phantom->add_option("--min-count", ph.config.min_count, "Minimum inclusion count")->capture_default_str();
  phantom->add_option("--max-count", ph.config.max_count, "Maximum inclusion count")->capture_default_str();
  phantom->add_option("--min-size", ph.config.min_size, "Minimum inclusion size")->capture_default_str();
  phantom->add_option("--max-size", ph.config.max_size, "Maximum inclusion size")->capture_default_str();
  phantom->add_option("--sigma", ph.config.inclusion_sigma, "Inclusion conductivity")->capture_default_str();
  phantom->add_option("--background", ph.config.background_sigma, "Background conductivity")
      ->capture_default_str();
  auto* render = phantom->add_subcommand("render", "Rasterize a phantom to a ground-truth PNG");
  render->add_option("--in", ph.render_in, "Phantom JSON")->required();
  render->add_option("--out", ph.render_out, "Output PNG")->required();
  render->add_option("--size", ph.render_size, "Image side in pixels")->capture_default_str();
  auto* sigma = phantom->add_subcommand("sigma", "Map a phantom to a per-element conductivity field");
  sigma->add_option("--in", ph.sigma_in, "Phantom JSON")->required();
  sigma->add_option("--mesh", ph.sigma_mesh, "Mesh .tmsh")->required();
  sigma->add_option("--out", ph.sigma_out, "Output field JSON")->required();

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate a boundary voltage frame");
  simulate->add_option("--mesh", sim.mesh, "Mesh .tmsh")->required();
  auto* sigma_opt = simulate->add_option("--sigma", sim.sigma, "Conductivity field JSON {\"sigma\": [...]}");
  simulate->add_option("--phantom", sim.phantom, "Phantom JSON")->excludes(sigma_opt);
  simulate->add_option("--protocol", sim.protocol, "adjacent or opposite")->capture_default_str();
  simulate->add_option("--amplitude", sim.amplitude, "Drive current")->capture_default_str();
  simulate->add_option("--out", sim.out, "Output .tfrm file")->required();

  SensitivityArgs sens;
  auto* sensitivity = app.add_subcommand("sensitivity", "Compute the sensitivity matrix");
  sensitivity->add_option("--mesh", sens.mesh, "Mesh .tmsh")->required();
  sensitivity->add_option("--protocol", sens.protocol, "adjacent or opposite")->capture_default_str();
  sensitivity->add_option("--background", sens.background, "Background conductivity")->capture_default_str();
  sensitivity->add_option("--out", sens.out, "Output .tsns file")->required();

  ReconstructArgs rec;
  auto* reconstruct_cmd = app.add_subcommand("reconstruct", "Reconstruct an image from a frame");
  reconstruct_cmd->add_option("--algo", rec.algo, "lbp, landweber or tikhonov")->capture_default_str();
  reconstruct_cmd->add_option("--iters", rec.iters, "Landweber iterations")->capture_default_str();
  reconstruct_cmd->add_option("--step", rec.step, "Landweber step (default 1/||S^T S||)");
  reconstruct_cmd->add_option("--lambda", rec.lambda, "Tikhonov weight (default 1e-2 trace(S^T S)/K)");
  reconstruct_cmd->add_flag("--binarize", rec.binarize, "Tikhonov: threshold at 0.5 instead of clamping");
  reconstruct_cmd->add_flag("--no-clamp", rec.no_clamp, "Tikhonov: skip the clamp to [0, 1]");
  reconstruct_cmd->add_option("--frame", rec.frame, "Measured .tfrm")->required();
  reconstruct_cmd->add_option("--reference", rec.reference, "Reference .tfrm (default: simulated background)");
  reconstruct_cmd->add_option("--sens", rec.sens, "Sensitivity .tsns (default: computed and cached)");
  reconstruct_cmd->add_option("--mesh", rec.mesh, "Mesh .tmsh")->required();
  reconstruct_cmd->add_option("--protocol", rec.protocol, "adjacent or opposite")->capture_default_str();
  reconstruct_cmd->add_option("--background", rec.background, "Background conductivity")->capture_default_str();
  reconstruct_cmd->add_flag("--no-cache", rec.no_cache, "Do not read or write the sensitivity cache");
  reconstruct_cmd->add_option("--out", rec.out, "Output PNG")->required();

  DatasetArgs ds;
  auto* dataset = app.add_subcommand("dataset", "Generate or hash paired image corpora");
  dataset->require_subcommand(1);
  auto* gen = dataset->add_subcommand("gen", "Generate a corpus; --count counts phantoms, not images");
  gen->add_option("--count", ds.count, "Number of phantoms")->capture_default_str();
  gen->add_option("--algos", ds.algos, "Comma-separated algorithms")->capture_default_str();
  gen->add_option("--test-fraction", ds.test_fraction, "Fraction of phantoms in the test split")
      ->capture_default_str();
  gen->add_option("--out-dir", ds.out_dir, "Output directory")->required();
  gen->add_option("--rings", ds.rings, "Mesh rings")->capture_default_str();
  gen->add_option("--electrodes", ds.electrodes, "Electrodes")->capture_default_str();
  gen->add_option("--protocol", ds.protocol, "adjacent or opposite")->capture_default_str();
  gen->add_option("--iters", ds.iters, "Landweber iterations")->capture_default_str();
  gen->add_option("--lambda", ds.lambda, "Tikhonov weight");
  gen->add_flag("--binarize", ds.binarize, "Tikhonov: threshold at 0.5");
  gen->add_flag("--no-cache", ds.no_cache, "Do not use the sensitivity cache");
  auto* hash = dataset->add_subcommand("hash", "Print the content hash of a corpus directory");
  hash->add_option("--dir", ds.hash_dir, "Corpus directory")->required();

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Score images: one pair, or every pair of a manifest split");
  eval->add_option("--pred", ev.pred, "Predicted PNG");
  eval->add_option("--truth", ev.truth, "Ground-truth PNG");
  eval->add_option("--metrics", ev.metrics, "Comma-separated subset of rmse,ssim,psnr")->capture_default_str();
  eval->add_option("--peak", ev.peak, "Peak pixel value")->capture_default_str();
  eval->add_option("--manifest", ev.manifest, "manifest.jsonl for batch mode");
  eval->add_option("--split", ev.split, "train, test or all")->capture_default_str();
  eval->add_option("--out", ev.out, "Batch CSV output (stdout when omitted)");
  eval->add_option("--enhanced-dir", ev.enhanced_dir, "Also score enhanced images with the input file names");

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "Assemble a comparison grid (rows: truth, algorithms, enhanced)");
  compare->add_option("--manifest", cmp.manifest, "manifest.jsonl")->required();
  compare->add_option("--ids", cmp.ids, "Comma-separated phantom ids (columns)")->delimiter(',')->required();
  compare->add_option("--algos", cmp.algos, "Algorithms to show (default: all in the manifest)");
  compare->add_option("--enhanced-dir", cmp.enhanced_dirs, "Enhanced image directory; repeat for more rows");
  compare->add_option("--out", cmp.out, "Output PNG")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  const Io io{out, err, globals};
  try {
    if (*mesh) {
      stage("mesh", [&] { cmd_mesh(mesh_args, io); });
    } else if (*phantom) {
      if (*render) {
        stage("phantom render", [&] { cmd_phantom_render(ph, io); });
      } else if (*sigma) {
        stage("phantom sigma", [&] { cmd_phantom_sigma(ph, io); });
      } else {
        stage("phantom", [&] { cmd_phantom_sample(ph, io); });
      }
    } else if (*simulate) {
      stage("simulate", [&] { cmd_simulate(sim, io); });
    } else if (*sensitivity) {
      stage("sensitivity", [&] { cmd_sensitivity(sens, io); });
    } else if (*reconstruct_cmd) {
      stage("reconstruct", [&] { cmd_reconstruct(rec, io); });
    } else if (*gen) {
      stage("dataset gen", [&] { cmd_dataset_gen(ds, io); });
    } else if (*hash) {
      stage("dataset hash", [&] { cmd_dataset_hash(ds, io); });
    } else if (*eval) {
      stage("eval", [&] { cmd_eval(ev, io); });
    } else if (*compare) {
      stage("compare", [&] { cmd_compare(cmp, io); });
    }
  } catch (const StageError& e) {
    err << "tomo: " << e.stage << ": " << e.message << '\n';
    return e.usage ? 2 : 1;
  }
  return 0;
}

}  // namespace tomo::cli
