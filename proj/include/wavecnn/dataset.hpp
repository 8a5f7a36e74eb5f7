// SPDX-License-Identifier: Apache-2.0
//
// Fold-based clip indexing (UrbanSound8K metadata layout), in-memory clip
// sets, and seeded batch plans.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wavecnn/error.hpp"
#include "wavecnn/tensor.hpp"

namespace wavecnn {

struct ClipRecord {
  std::string id;  // slice_file_name
  std::filesystem::path path;
  int label = 0;
  int fold = 0;
};

struct DatasetIndex {
  std::vector<ClipRecord> clips;
  /// From the optional "class" column, indexed by label; empty strings where unknown.
  std::vector<std::string> class_names;

  std::size_t num_classes() const;
};

/// Reads a CSV with at least `slice_file_name`, `fold` and `classID` columns
/// (any order, extra columns ignored). Files resolve to
/// `data_dir/fold<k>/<slice_file_name>`.
DatasetIndex load_metadata(const std::filesystem::path& csv_path, const std::filesystem::path& data_dir);
DatasetIndex parse_metadata(std::string_view csv_text, const std::filesystem::path& data_dir);

struct FoldSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// test = records in `test_fold`; validation = records in `validation_fold`
/// (0 disables); train = everything else.
FoldSplit split_folds(const DatasetIndex& index, int test_fold, int validation_fold);

/// Preprocessed clips held in memory, one 32000-sample row each.
struct ClipSet {
  std::vector<std::vector<float>> samples;
  std::vector<int> labels;
  std::vector<std::string> ids;
  std::size_t num_classes = 0;
  /// Samples before zero padding; filled only by corpus-standardization loads.
  std::vector<std::size_t> valid;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

enum class Standardization {
  per_clip,  // every clip to zero mean and unit variance
  corpus,  // clips left raw; apply corpus_statistics of the training split afterwards
};

struct LoadOptions {
  std::size_t clip_samples = 32000;
  /// Directory of cached per-clip standardized blobs; empty disables the
  /// cache. Corpus-mode loads always decode.
  std::filesystem::path cache_dir;
  Standardization standardization = Standardization::per_clip;
};

struct CorpusStats {
  double mean = 0.0;
  double stddev = 1.0;  // population, guarded by 1e-8
};

/// Statistics over the unpadded samples of a corpus-mode load.
CorpusStats corpus_statistics(const ClipSet& raw);

/// (x - mean) / stddev over each clip's unpadded region; padding stays 0.
void apply_standardization(ClipSet& raw, const CorpusStats& stats);

/// Decodes and preprocesses `rows` of the index (in the given order),
/// in parallel across files.
ClipSet load_clips(const DatasetIndex& index, std::span<const std::size_t> rows, const LoadOptions& options = {});

/// Cache key: FNV-1a of the file bytes, mixed with the clip length.
std::string cache_key(std::span<const std::byte> file_bytes, std::size_t clip_samples);

/// Fisher-Yates permutation of [0, n) seeded by (seed, epoch).
std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed, std::uint64_t epoch);

/// Groups a permutation into batches. A final batch of one row is dropped
/// (batch normalization needs two) and reported through `warn`.
std::vector<std::vector<std::size_t>> batch_plan(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                                 std::uint64_t epoch,
                                                 const std::function<void(const std::string&)>& warn = {});

struct Batch {
  TensorF x;  // [B, T, 1]
  std::vector<int> labels;
};

Batch assemble_batch(const ClipSet& clips, std::span<const std::size_t> rows);

/// Two-class set: even rows are a sine (label 0) at a random frequency in
/// [100, 3000] Hz with random phase, odd rows white Gaussian noise (label 1).
/// Every clip is standardized.
ClipSet synthetic_sine_noise(std::size_t count, std::uint64_t seed, std::size_t clip_samples = 32000);

/// Default warning sink (stderr).
void log_warning(const std::string& message);

}  // namespace wavecnn
