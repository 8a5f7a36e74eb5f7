// SPDX-License-Identifier: Apache-2.0
//
// Adam with l2 regularization, the epoch loop, evaluation and checkpoints.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wavecnn/dataset.hpp"
#include "wavecnn/model_zoo.hpp"

namespace wavecnn {

// ---------------------------------------------------------------------------
// Optimizer

struct AdamConfig {
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor<T>> m;  // one per parameter, created on the first step
  std::vector<Tensor<T>> v;
};

/// grad += 2 * coeff * value for every parameter (BN scale and shift only
/// when `include_batchnorm`). Missing gradients count as zero.
template <typename T>
void apply_l2(std::span<Parameter<T>> params, double coeff, bool include_batchnorm);

/// One bias-corrected Adam update from each parameter's `grad`.
template <typename T>
void adam_step(std::span<Parameter<T>> params, AdamState<T>& state);

// ---------------------------------------------------------------------------
// Configuration

struct TrainConfig {
  std::string arch = "m5";
  std::size_t num_classes = 10;
  std::size_t width_divisor = 1;
  /// Clip length; fixes the flatten size of -fc heads.
  std::size_t clip_samples = kClipSamples;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  AdamConfig adam;
  double l2 = 1e-4;
  bool l2_on_batchnorm = true;
  std::uint64_t seed = 0;
  int test_fold = 10;
  int validation_fold = 9;  // 0 keeps every non-test fold in training
  std::string checkpoint_path;
  std::size_t checkpoint_every = 0;  // epochs; 0 saves only at the end
  std::string log_path;
  /// Per-clip by default; corpus mode keeps the training split's statistics
  /// here so evaluation applies the same transform.
  Standardization standardization = Standardization::per_clip;
  CorpusStats corpus_stats;

  /// Throws ConfigError on an invalid combination.
  void validate() const;
  BuildOptions build_options() const;
};

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr int kCheckpointVersion = 1;

class CheckpointError : public Error {
 public:
  using Error::Error;
};
class CheckpointVersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class CheckpointTruncatedError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class CheckpointMismatchError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

struct NamedTensor {
  std::string name;
  TensorF value;
};

struct Checkpoint {
  int version = kCheckpointVersion;
  TrainConfig config;  // arch, width and class count rebuild the graph
  std::size_t epoch = 0;  // completed epochs
  std::string rng_state;  // dropout stream
  std::uint64_t adam_step = 0;
  AdamConfig adam;
  /// Parameters by name, then "<stats>.running_mean"/".running_var", then
  /// "adam.m/<param>" and "adam.v/<param>" once the optimizer has stepped.
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(std::string_view name) const;
};

Checkpoint capture_checkpoint(const ModelGraph& model, const AdamState<float>* adam, std::size_t epoch,
                              const RandomSource* rng, const TrainConfig& config);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);
Checkpoint decode_checkpoint(std::span<const std::byte> bytes);
std::vector<std::byte> encode_checkpoint(const Checkpoint& checkpoint);

/// Copies parameters and running statistics (and optimizer moments when
/// `adam` is given) into `model`. The first tensor whose name or shape does
/// not match raises CheckpointMismatchError.
void apply_checkpoint(const Checkpoint& checkpoint, ModelGraph& model, AdamState<float>* adam = nullptr);

/// Builds the checkpoint's architecture and loads it.
ModelGraph model_from_checkpoint(const Checkpoint& checkpoint);

// ---------------------------------------------------------------------------
// Evaluation and training

struct EvalResult {
  double accuracy = 0.0;
  std::size_t total = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
};

/// Infer-mode accuracy; argmax with the lowest class winning ties. The
/// model's mode is restored afterwards.
EvalResult evaluate(ModelGraph& model, const ClipSet& clips, std::size_t batch_size = 32);

/// Index of the largest entry in each row, first index on ties.
std::vector<int> argmax_rows(const TensorF& probabilities);

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;  // mean cross-entropy over the epoch's batches (l2 excluded)
  double train_acc = 0.0;  // running train-mode accuracy over the epoch
  double test_acc = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
};

/// "epoch,train_loss,train_acc,test_acc,seconds"
std::string metrics_header();
std::string metrics_row(const EpochMetrics& m);

class Trainer {
 public:
  explicit Trainer(TrainConfig config);
  /// Continues from a checkpoint; `epochs` overrides the stored target.
  static Trainer resume(const Checkpoint& checkpoint, std::optional<std::size_t> epochs = std::nullopt);

  EpochMetrics run_epoch(const ClipSet& train, const ClipSet* test = nullptr);

  /// Runs epochs until config().epochs, appending to the metrics log and
  /// writing checkpoints as configured.
  std::vector<EpochMetrics> fit(const ClipSet& train, const ClipSet* test = nullptr,
                                const std::function<void(const EpochMetrics&)>& on_epoch = {});

  Checkpoint checkpoint() const;

  const TrainConfig& config() const { return config_; }
  TrainConfig& config() { return config_; }
  ModelGraph& model() { return model_; }
  const ModelGraph& model() const { return model_; }
  const AdamState<float>& optimizer() const { return adam_; }
  std::size_t epochs_done() const { return epoch_; }

 private:
  Trainer(TrainConfig config, ModelGraph model);

  TrainConfig config_;
  ModelGraph model_;
  AdamState<float> adam_;
  RandomSource dropout_rng_;
  std::size_t epoch_ = 0;
};

// ---------------------------------------------------------------------------
// Synthetic overfit check

struct SmokeOptions {
  std::size_t clips = 32;
  std::size_t max_epochs = 50;
  std::size_t width_divisor = 8;
  std::size_t batch_size = 8;
  std::uint64_t seed = 1;
  std::string arch = "m3";
};

struct SmokeResult {
  bool reached_full_accuracy = false;
  std::size_t epochs_run = 0;
  std::vector<EpochMetrics> history;  // test_acc holds the infer-mode train accuracy
};

/// Trains on synthetic sine-vs-noise clips until infer-mode accuracy on the
/// training set reaches 1 or the epoch budget runs out.
SmokeResult run_smoke(const SmokeOptions& options, const std::function<void(const EpochMetrics&)>& on_epoch = {});

}  // namespace wavecnn
