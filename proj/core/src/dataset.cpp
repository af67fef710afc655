#include "tomo/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "binary_io.hpp"
#include "json_codec.hpp"
#include "tomo/error.hpp"
#include "tomo/hash.hpp"
#include "tomo/parallel.hpp"

namespace tomo {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string input_name(std::size_t phantom, Algorithm algorithm) {
  return "inputs/" + std::to_string(phantom) + "_" + std::string(to_string(algorithm)) + ".png";
}

std::string target_name(std::size_t phantom) { return "targets/" + std::to_string(phantom) + ".png"; }

template <class T>
json optional_json(const std::optional<T>& value) {
  return value ? json(*value) : json(nullptr);
}

template <class T>
std::optional<T> optional_from(const json& parent, const char* key) {
  if (!parent.contains(key) || parent.at(key).is_null()) return std::nullopt;
  return parent.at(key).get<T>();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

[[noreturn]] void rethrow_for_sample(std::size_t index, std::uint64_t seed) {
  const std::string prefix = "sample " + std::to_string(index) + " (seed " + std::to_string(seed) + "): ";
  try {
    throw;
  } catch (const IoError& e) {
    throw IoError(prefix + e.what());
  } catch (const SolverError& e) {
    throw SolverError(prefix + e.what());
  } catch (const DomainError& e) {
    throw DomainError(prefix + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const std::exception& e) {
    throw Error(prefix + e.what());
  }
}

}  // namespace

std::string_view to_string(Split split) { return split == Split::test ? "test" : "train"; }

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "test") return Split::test;
  throw ConfigError("unknown split \"" + std::string(name) + "\" (expected train or test)");
}

void GenerationConfig::validate() const {
  if (count < 1) throw ConfigError("dataset count must be >= 1");
  if (algorithms.empty()) throw ConfigError("at least one algorithm is required");
  std::set<Algorithm> seen(algorithms.begin(), algorithms.end());
  if (seen.size() != algorithms.size()) throw ConfigError("algorithm list contains duplicates");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test fraction must be in [0, 1), got " + std::to_string(test_fraction));
  }
  phantom.validate();
  if (landweber_iterations < 0) throw ConfigError("Landweber iterations must be >= 0");
}

Split split_assignment(std::uint64_t phantom_seed, std::uint64_t base_seed, double test_fraction) {
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) {
    throw ConfigError("test fraction must be in [0, 1], got " + std::to_string(test_fraction));
  }
  const double phase = static_cast<double>(splitmix64(base_seed) >> 11) * 0x1.0p-53;
  const auto index = static_cast<double>(phantom_seed - base_seed);
  const double before = std::floor(index * test_fraction + phase);
  const double after = std::floor((index + 1.0) * test_fraction + phase);
  return after > before ? Split::test : Split::train;
}

std::string record_to_json(const DatasetRecord& record) {
  json j = {{"id", record.id},
            {"phantom_id", record.phantom_id},
            {"seed", record.seed},
            {"algorithm", std::string(to_string(record.algorithm))},
            {"input_image", record.input_image},
            {"target_image", record.target_image},
            {"split", std::string(to_string(record.split))},
            {"phantom", detail::phantom_to_json_value(record.phantom)}};
  return j.dump();
}

DatasetRecord record_from_json(std::string_view line) {
  try {
    const json j = json::parse(line);
    DatasetRecord r;
    r.id = j.at("id").get<std::size_t>();
    r.phantom_id = j.value("phantom_id", r.id);
    r.seed = j.at("seed").get<std::uint64_t>();
    r.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    r.input_image = j.at("input_image").get<std::string>();
    r.target_image = j.at("target_image").get<std::string>();
    r.split = parse_split(j.at("split").get<std::string>());
    r.phantom = detail::phantom_from_json_value(j.at("phantom"));
    return r;
  } catch (const json::exception& e) {
    throw IoError(std::string("manifest record: ") + e.what());
  } catch (const ConfigError& e) {
    throw IoError(std::string("manifest record: ") + e.what());
  }
}

std::string config_to_json(const GenerationConfig& c) {
  json algorithms = json::array();
  for (auto a : c.algorithms) algorithms.push_back(std::string(to_string(a)));
  json j = {
      {"format_version", 1},
      {"count", c.count},
      {"algorithms", algorithms},
      {"base_seed", c.base_seed},
      {"test_fraction", c.test_fraction},
      {"mesh", {{"rings", c.n_rings}, {"electrodes", c.n_electrodes}, {"coverage", c.electrode_coverage}}},
      {"protocol", {{"scheme", c.scheme == DriveScheme::adjacent ? "adjacent" : "opposite"}, {"amplitude", 1.0}}},
      {"phantom",
       {{"min_count", c.phantom.min_count},
        {"max_count", c.phantom.max_count},
        {"min_size", c.phantom.min_size},
        {"max_size", c.phantom.max_size},
        {"inclusion_sigma", c.phantom.inclusion_sigma},
        {"background_sigma", c.phantom.background_sigma}}},
      {"recon",
       {{"landweber_iterations", c.landweber_iterations},
        {"landweber_step", optional_json(c.landweber_step)},
        {"tikhonov_lambda", optional_json(c.tikhonov_lambda)},
        {"tikhonov_clamp", c.tikhonov_clamp},
        {"tikhonov_binarize", c.tikhonov_binarize}}},
  };
  return j.dump(2) + "\n";
}

GenerationConfig config_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    GenerationConfig c;
    c.count = j.at("count").get<std::size_t>();
    c.algorithms.clear();
    for (const auto& a : j.at("algorithms")) c.algorithms.push_back(parse_algorithm(a.get<std::string>()));
    c.base_seed = j.at("base_seed").get<std::uint64_t>();
    c.test_fraction = j.at("test_fraction").get<double>();
    const auto& mesh = j.at("mesh");
    c.n_rings = mesh.at("rings").get<int>();
    c.n_electrodes = mesh.at("electrodes").get<int>();
    c.electrode_coverage = mesh.at("coverage").get<double>();
    const auto scheme = j.at("protocol").at("scheme").get<std::string>();
    if (scheme != "adjacent" && scheme != "opposite") throw IoError("config: unknown protocol " + scheme);
    c.scheme = scheme == "adjacent" ? DriveScheme::adjacent : DriveScheme::opposite;
    const auto& p = j.at("phantom");
    c.phantom.min_count = p.at("min_count").get<int>();
    c.phantom.max_count = p.at("max_count").get<int>();
    c.phantom.min_size = p.at("min_size").get<double>();
    c.phantom.max_size = p.at("max_size").get<double>();
    c.phantom.inclusion_sigma = p.at("inclusion_sigma").get<double>();
    c.phantom.background_sigma = p.at("background_sigma").get<double>();
    const auto& r = j.at("recon");
    c.landweber_iterations = r.at("landweber_iterations").get<int>();
    c.landweber_step = optional_from<double>(r, "landweber_step");
    c.tikhonov_lambda = optional_from<double>(r, "tikhonov_lambda");
    c.tikhonov_clamp = r.at("tikhonov_clamp").get<bool>();
    c.tikhonov_binarize = r.at("tikhonov_binarize").get<bool>();
    return c;
  } catch (const json::exception& e) {
    throw IoError(std::string("config: ") + e.what());
  }
}

void write_manifest(const DatasetManifest& manifest, const fs::path& out_dir) {
  std::string lines;
  for (const auto& r : manifest.records) lines += record_to_json(r) + "\n";
  write_text(out_dir / "manifest.jsonl", lines);
  write_text(out_dir / "config.json", config_to_json(manifest.config));
}

DatasetManifest read_manifest(const fs::path& manifest_path) {
  DatasetManifest manifest;
  std::istringstream in(read_text(manifest_path));
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      manifest.records.push_back(record_from_json(line));
    } catch (const IoError& e) {
      throw IoError(manifest_path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  const fs::path config_path = manifest_path.parent_path() / "config.json";
  if (fs::exists(config_path)) manifest.config = config_from_json(read_text(config_path));
  return manifest;
}

DatasetManifest generate_dataset(const GenerationConfig& config, const fs::path& out_dir) {
  config.validate();
  std::error_code ec;
  fs::create_directories(out_dir / "inputs", ec);
  if (!ec) fs::create_directories(out_dir / "targets", ec);
  if (ec) throw IoError("cannot create dataset directory " + out_dir.string() + ": " + ec.message());

  const DiscMesh mesh = build_disc_mesh(config.n_rings, config.n_electrodes, config.electrode_coverage);
  const auto protocol = MeasurementProtocol::make(config.scheme, config.n_electrodes);
  const double background = config.phantom.background_sigma;
  const SensitivityMatrix s = config.cache_dir
                                  ? cached_sensitivity(mesh, background, protocol, config.cache_dir, config.threads)
                                  : compute_sensitivity(mesh, background, protocol, config.threads);
  const VoltageFrame reference =
      simulate_frame(mesh, ConductivityField::uniform(mesh.triangle_count(), background), protocol);
  const Rasterizer raster(mesh);

  std::vector<Reconstructor> reconstructors;
  for (auto algorithm : config.algorithms) {
    ReconConfig rc;
    rc.algorithm = algorithm;
    rc.iterations = config.landweber_iterations;
    rc.step_size = config.landweber_step;
    rc.lambda = config.tikhonov_lambda;
    rc.clamp = config.tikhonov_clamp;
    rc.binarize = config.tikhonov_binarize;
    reconstructors.emplace_back(s, rc);
  }

  std::vector<PhantomSpec> phantoms(config.count);
  parallel_for(config.count, config.threads, [&](std::size_t i) {
    const std::uint64_t seed = config.base_seed + i;
    try {
      const PhantomSpec spec = sample_phantom(seed, config.phantom);
      const VoltageFrame frame = simulate_frame(mesh, phantom_to_sigma(mesh, spec), protocol);
      const NormalizedFrame u = normalize_frame(frame, reference);
      for (std::size_t a = 0; a < reconstructors.size(); ++a) {
        write_png(raster(reconstructors[a](u)), out_dir / input_name(i, config.algorithms[a]));
      }
      write_png(phantom_to_image(spec), out_dir / target_name(i));
      phantoms[i] = spec;
    } catch (...) {
      rethrow_for_sample(i, seed);
    }
  });

  DatasetManifest manifest;
  manifest.config = config;
  manifest.records.reserve(config.count * config.algorithms.size());
  for (std::size_t i = 0; i < config.count; ++i) {
    const std::uint64_t seed = config.base_seed + i;
    const Split split = split_assignment(seed, config.base_seed, config.test_fraction);
    for (auto algorithm : config.algorithms) {
      DatasetRecord r;
      r.id = manifest.records.size();
      r.phantom_id = i;
      r.seed = seed;
      r.phantom = phantoms[i];
      r.algorithm = algorithm;
      r.input_image = input_name(i, algorithm);
      r.target_image = target_name(i);
      r.split = split;
      manifest.records.push_back(std::move(r));
    }
  }
  write_manifest(manifest, out_dir);
  return manifest;
}

std::string corpus_hash(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  std::vector<std::pair<std::string, fs::path>> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files.emplace_back(fs::relative(entry.path(), dir).generic_string(), entry.path());
  }
  std::sort(files.begin(), files.end());
  Sha256 hash;
  for (const auto& [name, path] : files) {
    const auto bytes = detail::read_file(path);
    hash.update_u64(name.size()).update(name).update_u64(bytes.size()).update(bytes);
  }
  return hash.hex_digest();
}

}  // namespace tomo
