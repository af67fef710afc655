#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tomo/forward.hpp"
#include "tomo/phantom.hpp"
#include "tomo/recon.hpp"

namespace tomo {

enum class Split { train, test };

std::string_view to_string(Split split);
Split parse_split(std::string_view name);

/// Everything a corpus depends on. `threads` and `cache_dir` change how it
/// is produced but never what is produced, so they are not recorded.
struct GenerationConfig {
  std::size_t count = 1;
  std::vector<Algorithm> algorithms{Algorithm::lbp, Algorithm::landweber, Algorithm::tikhonov};
  std::uint64_t base_seed = 42;
  double test_fraction = 0.3;

  int n_rings = 16;
  int n_electrodes = 32;
  double electrode_coverage = 0.5;
  DriveScheme scheme = DriveScheme::adjacent;
  PhantomConfig phantom;

  int landweber_iterations = 200;
  std::optional<double> landweber_step;
  std::optional<double> tikhonov_lambda;
  bool tikhonov_clamp = true;
  bool tikhonov_binarize = false;

  unsigned threads = 1;
  std::optional<std::filesystem::path> cache_dir;

  /// Throws ConfigError for an empty or repeated algorithm list, count 0 or
  /// a test fraction outside [0, 1).
  void validate() const;
};

/// One (reconstruction, ground truth) pair. `id` is the record index; every
/// record of one phantom shares `phantom_id`, `seed`, the target and the split.
struct DatasetRecord {
  std::size_t id = 0;
  std::size_t phantom_id = 0;
  std::uint64_t seed = 0;
  PhantomSpec phantom;
  Algorithm algorithm = Algorithm::lbp;
  std::string input_image;
  std::string target_image;
  Split split = Split::train;

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

struct DatasetManifest {
  GenerationConfig config;
  std::vector<DatasetRecord> records;
};

/// Split of the phantom with seed `phantom_seed` in a corpus rooted at
/// `base_seed`. Phantom i = phantom_seed - base_seed is a test sample when
/// floor((i + 1) f + d) > floor(i f + d), with d in [0, 1) a hash of
/// base_seed. Every prefix of N phantoms therefore holds floor(N f) or
/// floor(N f) + 1 test samples, and growing a corpus never moves a phantom.
Split split_assignment(std::uint64_t phantom_seed, std::uint64_t base_seed, double test_fraction);

/// Writes inputs/{phantom}_{algo}.png, targets/{phantom}.png,
/// manifest.jsonl and config.json under out_dir. Samples run in parallel on
/// config.threads workers; the files do not depend on the worker count.
DatasetManifest generate_dataset(const GenerationConfig& config, const std::filesystem::path& out_dir);

std::string record_to_json(const DatasetRecord& record);
DatasetRecord record_from_json(std::string_view line);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& out_dir);
/// Reads a manifest.jsonl; the config comes from config.json beside it when present.
DatasetManifest read_manifest(const std::filesystem::path& manifest_path);

std::string config_to_json(const GenerationConfig& config);
GenerationConfig config_from_json(std::string_view text);

/// SHA-256 over every regular file below dir, in sorted relative-path
/// order, covering both names and contents.
std::string corpus_hash(const std::filesystem::path& dir);

}  // namespace tomo
