// SPDX-License-Identifier: Apache-2.0

#include "wavecnn/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iomanip>
#include <optional>
#include <sstream>

#include "wavecnn/spectra.hpp"
#include "wavecnn/train.hpp"

namespace wavecnn {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string epoch_line(const EpochMetrics& m) {
  std::string line = "epoch " + std::to_string(m.epoch) + "  loss " + fixed(m.train_loss, 6) + "  train_acc " +
                     fixed(m.train_acc, 4);
  if (!std::isnan(m.test_acc)) line += "  test_acc " + fixed(m.test_acc, 4);
  return line + "  " + fixed(m.seconds, 2) + "s";
}

void print_confusion(std::ostream& out, const EvalResult& r) {
  out << "confusion (rows true, columns predicted)\n";
  for (const auto& row : r.confusion) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? " " : "") << std::setw(5) << row[j];
    out << '\n';
  }
}

struct TrainArgs {
  TrainConfig config;
  std::string data, meta, cache, resume;
};

// Corpus mode applies the statistics already stored in `config`.
ClipSet load_split(const DatasetIndex& index, const std::vector<std::size_t>& rows, const TrainConfig& config,
                   const std::string& cache) {
  LoadOptions load;
  load.clip_samples = config.clip_samples;
  load.cache_dir = cache;
  load.standardization = config.standardization;
  ClipSet set = load_clips(index, rows, load);
  if (config.standardization == Standardization::corpus) apply_standardization(set, config.corpus_stats);
  return set;
}

int run_train(const TrainArgs& a, std::ostream& out) {
  const DatasetIndex index = load_metadata(a.meta, a.data);
  const FoldSplit split = split_folds(index, a.config.test_fold, a.config.validation_fold);
  out << "clips: train " << split.train.size() << ", validation " << split.validation.size() << ", test "
      << split.test.size() << ", classes " << index.num_classes() << std::endl;

  std::optional<Trainer> trainer;
  std::optional<ClipSet> train;
  if (a.resume.empty()) {
    TrainConfig config = a.config;
    config.num_classes = index.num_classes();
    if (config.standardization == Standardization::corpus) {
      LoadOptions load;
      load.clip_samples = config.clip_samples;
      load.standardization = Standardization::corpus;
      train = load_clips(index, split.train, load);
      config.corpus_stats = corpus_statistics(*train);
      apply_standardization(*train, config.corpus_stats);
      out << "corpus mean " << config.corpus_stats.mean << ", stddev " << config.corpus_stats.stddev << std::endl;
    }
    trainer.emplace(config);
  } else {
    trainer.emplace(Trainer::resume(load_checkpoint(a.resume), a.config.epochs));
    trainer->config().checkpoint_path = a.config.checkpoint_path;
    trainer->config().log_path = a.config.log_path;
    trainer->config().checkpoint_every = a.config.checkpoint_every;
    out << "resumed " << trainer->config().arch << " after epoch " << trainer->epochs_done() << std::endl;
  }
  const TrainConfig& config = trainer->config();
  if (!train) train = load_split(index, split.train, config, a.cache);
  const ClipSet test = load_split(index, split.test, config, a.cache);
  trainer->fit(*train, test.empty() ? nullptr : &test,
               [&](const EpochMetrics& m) { out << epoch_line(m) << std::endl; });

  if (!split.validation.empty()) {
    const ClipSet validation = load_split(index, split.validation, config, a.cache);
    out << "validation_acc=" << fixed(evaluate(trainer->model(), validation).accuracy, 6) << '\n';
  }
  if (!test.empty()) out << "test_acc=" << fixed(evaluate(trainer->model(), test).accuracy, 6) << '\n';
  if (!config.checkpoint_path.empty()) out << "checkpoint " << config.checkpoint_path << '\n';
  return 0;
}

int run_eval(const std::string& ckpt, const std::string& data, const std::string& meta, int fold,
             const std::string& cache, std::ostream& out) {
  const Checkpoint c = load_checkpoint(ckpt);
  ModelGraph model = model_from_checkpoint(c);
  const DatasetIndex index = load_metadata(meta, data);
  const int chosen = fold > 0 ? fold : c.config.test_fold;
  const FoldSplit split = split_folds(index, chosen, 0);
  if (split.test.empty()) throw ConfigError("fold " + std::to_string(chosen) + " has no clips");
  const EvalResult r = evaluate(model, load_split(index, split.test, c.config, cache));
  out << "arch=" << model.name() << '\n' << "fold=" << chosen << '\n' << "clips=" << r.total << '\n';
  out << "accuracy=" << fixed(r.accuracy, 6) << '\n';
  print_confusion(out, r);
  return 0;
}

int run_inspect(const std::string& arch, std::size_t time, std::size_t classes, std::size_t divisor,
                std::ostream& out) {
  BuildOptions o;
  o.num_classes = classes;
  o.width_divisor = divisor;
  o.input_time = time;
  const ArchitectureSpec spec = architecture(arch, o);
  const auto trace = shape_trace(spec, time);
  const auto groups = parameter_breakdown(spec);
  const std::uint64_t total = count_parameters(spec);

  std::size_t width = 12;
  for (const auto& row : trace) width = std::max(width, row.layer.size() + 2);
  out << "architecture " << spec.name << "  input " << time << " x 1  classes " << classes << "  width divisor "
      << divisor << "\n\n";
  out << std::left << std::setw(static_cast<int>(width)) << "layer" << "output (time x channels)\n";
  out << std::setw(static_cast<int>(width)) << "input" << time << " x 1\n";
  for (const auto& row : trace) {
    out << std::setw(static_cast<int>(width)) << row.layer << row.output[1] << " x " << row.output[2] << '\n';
  }
  out << '\n' << std::setw(12) << "weights" << "parameters\n";
  for (const auto& g : groups) out << std::setw(12) << g.layer << g.count << '\n';
  out << std::right << '\n';

  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << "trace=" << i << ',' << trace[i].output[1] << ',' << trace[i].output[2] << ',' << trace[i].layer << '\n';
  }
  for (const auto& g : groups) out << "group=" << g.layer << ',' << g.count << '\n';
  out << "weight_layers=" << spec.weight_layer_count() << '\n';
  out << "params_exact=" << total << '\n';
  out << "params_rounded=" << rounded_millions(total) << '\n';
  return 0;
}

int run_kernels(const std::string& ckpt, const std::string& csv, const std::string& pgm, std::ostream& out) {
  const SpectrumMatrix m = kernel_spectra(std::filesystem::path(ckpt));
  write_spectrum_csv(m, std::filesystem::path(csv));
  if (!pgm.empty()) write_spectrum_pgm(m, std::filesystem::path(pgm));
  out << "kernels=" << m.rows << '\n' << "bins=" << m.cols << '\n';
  out << "bin_hz=" << bin_frequency_hz(1, m.rf) << '\n';
  return 0;
}

int run_smoke_command(const SmokeOptions& o, std::ostream& out) {
  const SmokeResult r = run_smoke(o, [&](const EpochMetrics& m) {
    out << "epoch " << m.epoch << "  loss " << fixed(m.train_loss, 6) << "  train_acc " << fixed(m.test_acc, 4)
        << std::endl;
  });
  out << (r.reached_full_accuracy ? "smoke PASS" : "smoke FAIL") << ": " << r.epochs_run << " epochs\n";
  return r.reached_full_accuracy ? 0 : 1;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Raw-waveform 1D CNN training and analysis"};
  app.name("wavecnn");
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1, 1);
  app.fallthrough(false);
  app.get_formatter()->column_width(36);

  TrainArgs ta;
  TrainConfig& tc = ta.config;
  auto* train = app.add_subcommand("train", "Train a model on a fold-split corpus");
  train->add_option("--arch", tc.arch, "Architecture name");
  train->add_option("--data", ta.data, "Corpus root holding fold<k>/ directories")->required();
  train->add_option("--meta", ta.meta, "Metadata CSV")->required();
  train->add_option("--epochs", tc.epochs, "Epoch count");
  train->add_option("--batch-size", tc.batch_size, "Batch size");
  train->add_option("--lr", tc.adam.alpha, "Adam learning rate");
  train->add_option("--l2", tc.l2, "l2 coefficient");
  train->add_option("--l2-bn", tc.l2_on_batchnorm, "Apply l2 to batch-norm scale and shift");
  train->add_option("--seed", tc.seed, "Random seed");
  train->add_option("--test-fold", tc.test_fold, "Held-out test fold");
  train->add_option("--validation-fold", tc.validation_fold, "Validation fold (0 trains on it)");
  train->add_option("--width-divisor", tc.width_divisor, "Divide every filter count");
  train->add_option("--clip-samples", tc.clip_samples, "Samples per clip after resampling");
  train->add_option("--standardize", tc.standardization, "Per-clip or training-corpus statistics")
      ->transform(CLI::CheckedTransformer(std::map<std::string, Standardization>{{"clip", Standardization::per_clip},
                                                                                 {"corpus", Standardization::corpus}},
                                          CLI::ignore_case))
      ->default_str("clip");
  train->add_option("--out", tc.checkpoint_path, "Checkpoint file")->default_str("none");
  train->add_option("--checkpoint-every", tc.checkpoint_every, "Epochs between checkpoints (0 only at the end)");
  train->add_option("--log", tc.log_path, "Metrics CSV, appended per epoch")->default_str("none");
  train->add_option("--cache", ta.cache, "Directory for preprocessed clips")->default_str("none");
  train->add_option("--resume", ta.resume, "Checkpoint to continue from")->default_str("none");

  std::string eval_ckpt, eval_data, eval_meta, eval_cache;
  int eval_fold = 0;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on one fold");
  eval->add_option("--ckpt", eval_ckpt, "Checkpoint file")->required();
  eval->add_option("--data", eval_data, "Corpus root")->required();
  eval->add_option("--meta", eval_meta, "Metadata CSV")->required();
  eval->add_option("--fold", eval_fold, "Fold to evaluate (0 uses the checkpoint's test fold)");
  eval->add_option("--cache", eval_cache, "Directory for preprocessed clips")->default_str("none");

  std::string inspect_arch;
  std::size_t inspect_time = kClipSamples, inspect_classes = 10, inspect_div = 1;
  auto* inspect = app.add_subcommand("inspect", "Print layer table, shape trace and parameter counts");
  inspect->add_option("--arch", inspect_arch, "Architecture name")->required();
  inspect->add_option("--time", inspect_time, "Input length in samples");
  inspect->add_option("--classes", inspect_classes, "Class count");
  inspect->add_option("--width-divisor", inspect_div, "Divide every filter count");

  std::string k_ckpt, k_csv, k_pgm;
  auto* kernels = app.add_subcommand("kernels", "Write first-layer kernel spectra");
  kernels->add_option("--ckpt", k_ckpt, "Checkpoint file")->required();
  kernels->add_option("--out-csv", k_csv, "Spectrum CSV")->required();
  kernels->add_option("--out-pgm", k_pgm, "Spectrum image (binary PGM)")->default_str("none");

  SmokeOptions so;
  auto* smoke = app.add_subcommand("smoke", "Overfit synthetic sine-vs-noise clips");
  smoke->add_option("--arch", so.arch, "Architecture name");
  smoke->add_option("--clips", so.clips, "Synthetic clip count");
  smoke->add_option("--epochs", so.max_epochs, "Epoch budget");
  smoke->add_option("--width-divisor", so.width_divisor, "Divide every filter count");
  smoke->add_option("--batch-size", so.batch_size, "Batch size");
  smoke->add_option("--seed", so.seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto used = app.get_subcommands();
    err << (used.empty() ? app.help() : used.back()->help("wavecnn"));
    return 2;
  }

  try {
    if (*train) return run_train(ta, out);
    if (*eval) return run_eval(eval_ckpt, eval_data, eval_meta, eval_fold, eval_cache, out);
    if (*inspect) return run_inspect(inspect_arch, inspect_time, inspect_classes, inspect_div, out);
    if (*kernels) return run_kernels(k_ckpt, k_csv, k_pgm, out);
    if (*smoke) return run_smoke_command(so, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace wavecnn
