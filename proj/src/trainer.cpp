// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "wavecnn/train.hpp"

namespace wavecnn {

namespace {

// Independent random streams per purpose, all derived from the config seed.
constexpr std::uint64_t kInitStream = 0x1;
constexpr std::uint64_t kDropoutStream = 0x2;
constexpr std::uint64_t kShuffleStream = 0x3;

std::uint64_t shuffle_seed(std::uint64_t seed) { return RandomSource::derive(seed, kShuffleStream).next_u64(); }

ModelGraph initial_model(const TrainConfig& config) {
  config.validate();
  RandomSource init = RandomSource::derive(config.seed, kInitStream);
  return ModelGraph::build(config.arch, config.build_options(), init);
}

void append_metrics(const std::string& path, const EpochMetrics& m) {
  if (path.empty()) return;
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error("cannot append to metrics log " + path);
  if (fresh) out << metrics_header() << '\n';
  out << metrics_row(m) << '\n';
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 2) throw ConfigError("batch size must be >= 2 (batch normalization)");
  if (l2 < 0.0) throw ConfigError("l2 coefficient must be >= 0");
  if (num_classes < 2) throw ConfigError("need at least two classes");
  if (width_divisor < 1) throw ConfigError("width divisor must be >= 1");
  if (clip_samples < 1) throw ConfigError("clip length must be >= 1");
  if (adam.alpha <= 0.0) throw ConfigError("learning rate must be positive");
  if (adam.beta1 < 0.0 || adam.beta1 >= 1.0 || adam.beta2 < 0.0 || adam.beta2 >= 1.0) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
}

BuildOptions TrainConfig::build_options() const {
  BuildOptions o;
  o.num_classes = num_classes;
  o.width_divisor = width_divisor;
  o.input_time = clip_samples;
  return o;
}

std::vector<int> argmax_rows(const TensorF& p) {
  const std::size_t rows = p.dim(0), cols = p.dim(1);
  std::vector<int> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < cols; ++c) {
      if (p[r * cols + c] > p[r * cols + best]) best = c;
    }
    out[r] = static_cast<int>(best);
  }
  return out;
}

EvalResult evaluate(ModelGraph& model, const ClipSet& clips, std::size_t batch_size) {
  if (batch_size < 1) throw ConfigError("evaluation batch size must be >= 1");
  const Mode saved = model.mode();
  model.set_mode(Mode::infer);
  const std::size_t k = model.num_classes();
  EvalResult r;
  r.confusion.assign(k, std::vector<std::size_t>(k, 0));
  std::size_t correct = 0;
  try {
    for (std::size_t start = 0; start < clips.size(); start += batch_size) {
      std::vector<std::size_t> rows;
      for (std::size_t i = start; i < std::min(clips.size(), start + batch_size); ++i) rows.push_back(i);
      const Batch b = assemble_batch(clips, rows);
      const std::vector<int> predicted = argmax_rows(model.forward(b.x));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const int truth = b.labels[i];
        if (truth < 0 || static_cast<std::size_t>(truth) >= k) {
          throw ConfigError("label " + std::to_string(truth) + " outside the model's " + std::to_string(k) +
                            " classes");
        }
        r.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted[i])] += 1;
        correct += predicted[i] == truth;
      }
    }
  } catch (...) {
    model.set_mode(saved);
    throw;
  }
  model.set_mode(saved);
  r.total = clips.size();
  r.accuracy = r.total ? static_cast<double>(correct) / static_cast<double>(r.total) : 0.0;
  return r;
}

std::string metrics_header() { return "epoch,train_loss,train_acc,test_acc,seconds"; }

std::string metrics_row(const EpochMetrics& m) {
  char buf[160];
  char test[32] = "";
  if (!std::isnan(m.test_acc)) std::snprintf(test, sizeof test, "%.6f", m.test_acc);
  std::snprintf(buf, sizeof buf, "%zu,%.9g,%.6f,%s,%.3f", m.epoch, m.train_loss, m.train_acc, test, m.seconds);
  return buf;
}

Trainer::Trainer(TrainConfig config) : Trainer(config, initial_model(config)) {}

Trainer::Trainer(TrainConfig config, ModelGraph model)
    : config_(std::move(config)),
      model_(std::move(model)),
      dropout_rng_(RandomSource::derive(config_.seed, kDropoutStream)) {
  adam_.config = config_.adam;
}

Trainer Trainer::resume(const Checkpoint& checkpoint, std::optional<std::size_t> epochs) {
  TrainConfig config = checkpoint.config;
  if (epochs) config.epochs = *epochs;
  config.validate();
  RandomSource unused(0);
  Trainer t(config, ModelGraph::build(config.arch, config.build_options(), unused));
  apply_checkpoint(checkpoint, t.model_, &t.adam_);
  if (!checkpoint.rng_state.empty()) t.dropout_rng_.set_state(checkpoint.rng_state);
  t.epoch_ = checkpoint.epoch;
  return t;
}

EpochMetrics Trainer::run_epoch(const ClipSet& train, const ClipSet* test) {
  if (train.size() < 2) throw ConfigError("training split needs at least 2 clips");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t epoch = epoch_ + 1;
  const auto plan = batch_plan(train.size(), config_.batch_size, shuffle_seed(config_.seed), epoch);

  model_.set_mode(Mode::train);
  double loss_sum = 0.0;
  std::size_t seen = 0, correct = 0;
  for (std::size_t bi = 0; bi < plan.size(); ++bi) {
    const Batch batch = assemble_batch(train, plan[bi]);
    const std::string where = "epoch " + std::to_string(epoch) + " batch " + std::to_string(bi);
    StepResult<float> step;
    try {
      step = model_.forward_backward(batch.x, batch.labels, dropout_rng_);
    } catch (const NonFiniteError& e) {
      throw NonFiniteError("non-finite value at " + where + ": " + e.what());
    }
    if (!std::isfinite(step.loss)) throw NonFiniteError("non-finite loss at " + where);
    apply_l2(model_.parameters(), config_.l2, config_.l2_on_batchnorm);
    adam_step(model_.parameters(), adam_);

    const std::vector<int> predicted = argmax_rows(step.probabilities);
    for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == batch.labels[i];
    loss_sum += step.loss * static_cast<double>(predicted.size());
    seen += predicted.size();
  }
  model_.set_mode(Mode::infer);
  epoch_ = epoch;

  EpochMetrics m;
  m.epoch = epoch;
  m.train_loss = loss_sum / static_cast<double>(seen);
  m.train_acc = static_cast<double>(correct) / static_cast<double>(seen);
  if (test && !test->empty()) m.test_acc = evaluate(model_, *test, config_.batch_size).accuracy;
  m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return m;
}

std::vector<EpochMetrics> Trainer::fit(const ClipSet& train, const ClipSet* test,
                                       const std::function<void(const EpochMetrics&)>& on_epoch) {
  if (train.empty()) throw ConfigError("training split is empty");
  std::vector<EpochMetrics> history;
  while (epoch_ < config_.epochs) {
    const EpochMetrics m = run_epoch(train, test);
    append_metrics(config_.log_path, m);
    history.push_back(m);
    if (on_epoch) on_epoch(m);
    const bool last = epoch_ == config_.epochs;
    const bool periodic = config_.checkpoint_every > 0 && epoch_ % config_.checkpoint_every == 0;
    if (!config_.checkpoint_path.empty() && (last || periodic)) save_checkpoint(checkpoint(), config_.checkpoint_path);
  }
  return history;
}

Checkpoint Trainer::checkpoint() const { return capture_checkpoint(model_, &adam_, epoch_, &dropout_rng_, config_); }

SmokeResult run_smoke(const SmokeOptions& options, const std::function<void(const EpochMetrics&)>& on_epoch) {
  const ClipSet clips = synthetic_sine_noise(options.clips, options.seed);
  TrainConfig config;
  config.arch = options.arch;
  config.num_classes = 2;
  config.width_divisor = options.width_divisor;
  config.epochs = options.max_epochs;
  config.batch_size = options.batch_size;
  config.seed = options.seed;
  Trainer trainer(config);

  SmokeResult result;
  while (trainer.epochs_done() < options.max_epochs) {
    EpochMetrics m = trainer.run_epoch(clips);
    m.test_acc = evaluate(trainer.model(), clips, options.batch_size).accuracy;
    result.history.push_back(m);
    if (on_epoch) on_epoch(m);
    if (m.test_acc == 1.0) {
      result.reached_full_accuracy = true;
      break;
    }
  }
  result.epochs_run = trainer.epochs_done();
  return result;
}

}  // namespace wavecnn
