// SPDX-License-Identifier: Apache-2.0
//
// Acceptance report: one PASS/FAIL/SKIP line per criterion. Exits 0 once the
// report is complete; --strict turns every FAIL into a non-zero exit.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "wav_builder.hpp"
#include "wavecnn/audio.hpp"
#include "wavecnn/cli.hpp"
#include "wavecnn/spectra.hpp"
#include "wavecnn/train.hpp"

using namespace wavecnn;

namespace {

// Pinned tolerances and budgets.
constexpr double kArchitectureBudgetS = 1.0;
constexpr double kGradientBudgetS = 120.0;
constexpr double kOracleBudgetS = 60.0;
constexpr double kSmokeBudgetS = 300.0;
constexpr int kGradientTrials = 20;
constexpr double kGradientTolerance = 1e-4;
constexpr int kOracleCases = 100;
constexpr double kSpectrumTolerance = 1e-10;
constexpr double kRatioLow = 1e-4;
constexpr double kRatioHigh = 1e4;
constexpr double kPassbandMin = 0.9;
constexpr double kStopbandMax = 0.05;
constexpr double kMeanTolerance = 1e-5;
constexpr double kVarianceTolerance = 1e-4;
constexpr double kCorpusAccuracy = 0.7;

enum class Status { pass, fail, skip };

struct Outcome {
  Status status = Status::fail;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------
// Architecture golden values

struct Golden {
  std::string arch;
  std::string label;
  // Convolution widths in order, stages as (width, count).
  std::size_t first_width;
  std::vector<std::pair<std::size_t, std::size_t>> stages;
  bool residual;
  std::vector<std::pair<std::size_t, std::size_t>> pooled;  // (time, channels) after each pool, then GAP
};

// Closed-form count: [80/4] first conv, 3-wide convs, BN scale and shift per
// conv, no conv bias, dense with bias to 10 classes.
std::uint64_t closed_form_count(const Golden& g) {
  std::uint64_t total = 80 * 1 * g.first_width + 2 * g.first_width;
  std::uint64_t in = g.first_width;
  for (auto [width, count] : g.stages) {
    const std::size_t convs = g.residual ? 2 * count : count;
    for (std::size_t i = 0; i < convs; ++i) {
      total += 3 * in * width + 2 * width;
      in = width;
    }
  }
  return total + in * 10 + 10;
}

std::vector<Golden> goldens() {
  return {
      {"m3", "0.2M", 256, {{256, 1}}, false, {{2000, 256}, {500, 256}, {1, 256}}},
      {"m5", "0.5M", 128, {{128, 1}, {256, 1}, {512, 1}}, false,
       {{2000, 128}, {500, 128}, {125, 256}, {32, 512}, {1, 512}}},
      {"m11", "1.8M", 64, {{64, 2}, {128, 2}, {256, 3}, {512, 2}}, false,
       {{2000, 64}, {500, 64}, {125, 128}, {32, 256}, {1, 512}}},
      {"m18", "3.7M", 64, {{64, 4}, {128, 4}, {256, 4}, {512, 4}}, false,
       {{2000, 64}, {500, 64}, {125, 128}, {32, 256}, {1, 512}}},
      {"m34-res", "4M", 48, {{48, 3}, {96, 4}, {192, 6}, {384, 3}}, true,
       {{2000, 48}, {500, 48}, {125, 96}, {32, 192}, {1, 384}}},
  };
}

std::string cli_output(std::vector<std::string> args) {
  args.insert(args.begin(), "wavecnn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  if (cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err) != 0) throw Error(err.str());
  return out.str();
}

std::string value_of(const std::string& text, const std::string& key) {
  const auto at = text.find(key + "=");
  if (at == std::string::npos) return "";
  const auto start = at + key.size() + 1;
  return text.substr(start, text.find('\n', start) - start);
}

Outcome architecture_golden() {
  const auto start = std::chrono::steady_clock::now();
  bool counts_ok = true, labels_ok = true, traces_ok = true;
  std::ostringstream detail;
  for (const Golden& g : goldens()) {
    const std::string text = cli_output({"inspect", "--arch", g.arch});
    const std::string exact = value_of(text, "params_exact");
    const std::string rounded = value_of(text, "params_rounded");
    const std::uint64_t oracle = closed_form_count(g);
    counts_ok = counts_ok && exact == std::to_string(oracle);
    labels_ok = labels_ok && rounded == g.label;

    std::vector<std::pair<std::size_t, std::size_t>> pooled;
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);) {
      if (line.rfind("trace=", 0) != 0) continue;
      if (line.find("maxpool") == std::string::npos && line.find("global_avg_pool") == std::string::npos) continue;
      std::istringstream fields(line.substr(6));
      std::string idx, time, ch;
      std::getline(fields, idx, ',');
      std::getline(fields, time, ',');
      std::getline(fields, ch, ',');
      pooled.emplace_back(std::stoul(time), std::stoul(ch));
    }
    const bool trace_ok = pooled == g.pooled;
    traces_ok = traces_ok && trace_ok;
    detail << g.arch << " " << exact << " (" << rounded << (rounded == g.label ? "" : " vs published " + g.label)
           << (trace_ok ? "" : ", trace mismatch") << "); ";
  }
  const double t = seconds_since(start);
  detail << "runtime " << fmt("%.3f", t) << " s";
  return verdict(counts_ok && labels_ok && traces_ok && t < kArchitectureBudgetS, detail.str());
}

// ---------------------------------------------------------------------------

Outcome gradient_suite() {
  const auto start = std::chrono::steady_clock::now();
  RandomSource rng(2024);
  bool ok = true;
  std::ostringstream detail;
  double overall = 0;
  for (const auto& op : testing::gradient_ops()) {
    double worst = 0;
    for (int i = 0; i < kGradientTrials; ++i) worst = std::max(worst, op.trial(rng));
    overall = std::max(overall, worst);
    if (!(worst < kGradientTolerance)) {
      ok = false;
      detail << op.name << " worst " << worst << "; ";
    }
  }
  const double t = seconds_since(start);
  detail << testing::gradient_ops().size() << " ops x " << kGradientTrials << " trials, worst rel err "
         << fmt("%.2e", overall) << ", runtime " << fmt("%.1f", t) << " s";
  return verdict(ok && t < kGradientBudgetS, detail.str());
}

Outcome oracle_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  RandomSource rng(99);
  int conv_bad = 0, pool_bad = 0;
  for (int c = 0; c < kOracleCases; ++c) {
    const std::size_t rf = 1 + rng.index(9), stride = 1 + rng.index(4);
    const Shape s{1 + rng.index(4), 1 + rng.index(300), 1 + rng.index(6)};
    const std::size_t out = 1 + rng.index(6);
    const TensorD x = testing::random_tensor<double>(s, rng);
    const TensorD k = testing::random_tensor<double>(Shape{rf, s[2], out}, rng);
    const TensorD b = testing::random_tensor<double>(Shape{out}, rng);
    const bool bias = rng.uniform() < 0.5;
    const TensorD* bias_ptr = bias ? &b : nullptr;
    if (!(conv1d_forward(x, k, bias_ptr, stride) == testing::naive_conv1d(x, k, bias_ptr, stride))) ++conv_bad;
    const Shape ps{1 + rng.index(4), 1 + rng.index(300), 1 + rng.index(6)};
    const TensorD p = testing::random_tensor<double>(ps, rng);
    if (!(maxpool1d_forward(p).out == testing::naive_maxpool(p, 4))) ++pool_bad;
  }

  double spectrum_err = 0;
  for (std::size_t rf : {8u, 80u, 320u}) {
    TensorD k = testing::random_tensor<double>(Shape{rf, 1, 32}, rng);
    const SpectrumMatrix m = kernel_spectra(k);
    for (std::size_t r = 0; r < m.rows; ++r) {
      std::vector<double> column(rf);
      for (std::size_t t = 0; t < rf; ++t) column[t] = k[t * 32 + m.kernel[r]];
      const std::vector<double> ref = testing::naive_dft_magnitude(column);
      const double top = *std::max_element(ref.begin(), ref.end());
      for (std::size_t c = 0; c < m.cols; ++c) {
        spectrum_err = std::max(spectrum_err, std::abs(m.at(r, c) - ref[c] / top));
      }
    }
  }
  const double t = seconds_since(start);
  std::ostringstream detail;
  detail << "conv1d " << kOracleCases - conv_bad << "/" << kOracleCases << " exact, maxpool1d "
         << kOracleCases - pool_bad << "/" << kOracleCases << " exact, spectra max err " << fmt("%.2e", spectrum_err)
         << ", runtime " << fmt("%.1f", t) << " s";
  return verdict(conv_bad == 0 && pool_bad == 0 && spectrum_err < kSpectrumTolerance && t < kOracleBudgetS,
                 detail.str());
}

// ---------------------------------------------------------------------------

Outcome overfit_smoke() {
  const auto start = std::chrono::steady_clock::now();
  const SmokeResult a = run_smoke(SmokeOptions{});
  const double t = seconds_since(start);
  const SmokeResult b = run_smoke(SmokeOptions{});
  bool same = a.history.size() == b.history.size();
  for (std::size_t i = 0; same && i < a.history.size(); ++i) {
    same = a.history[i].train_loss == b.history[i].train_loss && a.history[i].test_acc == b.history[i].test_acc;
  }
  std::ostringstream detail;
  detail << "m3 width/8 on 32 clips: " << (a.reached_full_accuracy ? "100% train accuracy" : "did not converge")
         << " after " << a.epochs_run << " epochs, repeat run " << (same ? "identical" : "differs") << ", runtime "
         << fmt("%.1f", t) << " s";
  return verdict(a.reached_full_accuracy && a.epochs_run <= 50 && same && t < kSmokeBudgetS, detail.str());
}

Outcome trainability_contrast() {
  const ClipSet clips = synthetic_sine_noise(32, 1);
  auto config = [](const std::string& arch) {
    TrainConfig c;
    c.arch = arch;
    c.num_classes = 2;
    c.width_divisor = 8;
    c.batch_size = 8;
    c.epochs = 5;
    c.seed = 1;
    return c;
  };
  // Gradient norms at initialization on the first eight clips.
  auto norms_at_init = [&](const Trainer& t) {
    ModelGraph probe = t.model();
    probe.set_mode(Mode::train);
    std::vector<std::size_t> rows(8);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    const Batch b = assemble_batch(clips, rows);
    RandomSource rng(7);
    (void)probe.forward_backward(b.x, b.labels, rng);
    return probe.weight_gradient_norms();
  };

  Trainer with_bn(config("m34-res"));
  Trainer without_bn(config("m34-no-bn"));
  const std::vector<double> bn_norms = norms_at_init(with_bn);
  const std::vector<double> plain_norms = norms_at_init(without_bn);
  const double bn_loss = with_bn.fit(clips).back().train_loss;
  const double plain_loss = without_bn.fit(clips).back().train_loss;

  const double ratio = plain_norms.front() / plain_norms.back();
  const bool loss_ok = bn_loss < plain_loss;
  const bool ratio_ok = ratio < kRatioLow || ratio > kRatioHigh;
  const auto [lo, hi] = std::minmax_element(plain_norms.begin(), plain_norms.end());
  const auto [blo, bhi] = std::minmax_element(bn_norms.begin(), bn_norms.end());
  std::ostringstream detail;
  detail << "epoch-5 loss m34-res " << fmt("%.4g", bn_loss) << " vs m34-no-bn " << fmt("%.4g", plain_loss)
         << (loss_ok ? " (lower)" : " (not lower)") << "; m34-no-bn first/last grad norm " << fmt("%.3g", ratio)
         << (ratio_ok ? " outside" : " inside") << " [1e-4, 1e4]; layer norms m34-no-bn " << fmt("%.1e", *lo) << ".."
         << fmt("%.1e", *hi) << ", m34-res " << fmt("%.1e", *blo) << ".." << fmt("%.1e", *bhi);
  return verdict(loss_ok && ratio_ok, detail.str());
}

Outcome residual_passthrough() {
  RandomSource rng(17);
  BuildOptions narrow;
  narrow.width_divisor = 4;
  ModelGraph64 g = ModelGraph64::build("m34-res", narrow, rng);
  for (Parameter<double>& p : g.parameters()) {
    if (p.kind == ParamKind::conv_kernel && p.name != "conv0.kernel") p.value.fill(0.0);
  }
  const TensorD x = testing::random_tensor<double>(Shape{2, kClipSamples, 1}, rng);
  const TensorD got = g.forward(x);

  // Shortcut-only reference: first conv unit, then pooling, channel padding and ReLU.
  TensorD h = testing::naive_conv1d(x, g.find_parameter("conv0.kernel")->value, nullptr, 4);
  BatchNormStats<double> stats = BatchNormStats<double>::identity(h.dim(2));
  h = batchnorm_forward(h, g.find_parameter("conv0.bn.gamma")->value, g.find_parameter("conv0.bn.beta")->value, stats,
                        BatchNormConfig{}, Mode::infer)
          .y;
  h = relu_forward(h);
  for (auto [width, blocks] : std::vector<std::pair<std::size_t, int>>{{12, 3}, {24, 4}, {48, 6}, {96, 3}}) {
    h = testing::naive_maxpool(h, 4);
    for (int i = 0; i < blocks; ++i) h = relu_forward(pad_channels_forward(h, width));
  }
  h = global_avg_pool_forward(h).reshaped(Shape{2, 96});
  const TensorD logits = linear_forward(h, g.find_parameter("dense.w")->value, &g.find_parameter("dense.b")->value);
  const std::vector<int> any(2, 0);
  const TensorD want = softmax_xent_forward(logits, any).probabilities;
  double worst = 0;
  for (std::size_t i = 0; i < want.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
  return verdict(worst == 0.0, "m34-res width/4, 64-bit, max abs diff " + fmt("%.3g", worst));
}

Outcome checkpoint_round_trip() {
  const auto dir = std::filesystem::temp_directory_path() / "wavecnn-acceptance-ckpt";
  std::filesystem::remove_all(dir);
  const ClipSet clips = synthetic_sine_noise(10, 8, 2000);
  TrainConfig c;
  c.arch = "m5-fc";
  c.num_classes = 2;
  c.width_divisor = 16;
  c.clip_samples = 2000;
  c.batch_size = 4;
  c.epochs = 3;
  c.seed = 5;

  Trainer straight(c);
  (void)straight.fit(clips);
  const Checkpoint reference = straight.checkpoint();
  save_checkpoint(reference, dir / "full.ckpt");
  const Checkpoint loaded = load_checkpoint(dir / "full.ckpt");
  bool bitwise = loaded.tensors.size() == reference.tensors.size() && loaded.rng_state == reference.rng_state &&
                 loaded.adam_step == reference.adam_step;
  for (std::size_t i = 0; bitwise && i < loaded.tensors.size(); ++i) {
    const auto a = std::as_bytes(loaded.tensors[i].value.data());
    const auto b = std::as_bytes(reference.tensors[i].value.data());
    bitwise = loaded.tensors[i].name == reference.tensors[i].name && std::equal(a.begin(), a.end(), b.begin(), b.end());
  }

  TrainConfig leg = c;
  leg.epochs = 2;
  leg.checkpoint_path = (dir / "leg.ckpt").string();
  Trainer first(leg);
  (void)first.fit(clips);
  Trainer resumed = Trainer::resume(load_checkpoint(dir / "leg.ckpt"), 3);
  (void)resumed.fit(clips);
  const Checkpoint after = resumed.checkpoint();
  bool identical = after.tensors.size() == reference.tensors.size() && after.rng_state == reference.rng_state &&
                   after.adam_step == reference.adam_step && after.epoch == reference.epoch;
  for (std::size_t i = 0; identical && i < after.tensors.size(); ++i) {
    identical = after.tensors[i].name == reference.tensors[i].name &&
                after.tensors[i].value == reference.tensors[i].value;
  }
  std::filesystem::remove_all(dir);
  return verdict(bitwise && identical, std::string("save/load ") + (bitwise ? "bitwise identical" : "differs") +
                                           ", resume after epoch 2 of 3 " +
                                           (identical ? "identical to uninterrupted run" : "diverges") +
                                           " (m5-fc with dropout, " + std::to_string(reference.tensors.size()) +
                                           " tensors)");
}

// ---------------------------------------------------------------------------

double amplitude(const std::vector<double>& y) {
  const std::size_t a = y.size() / 4, b = 3 * y.size() / 4;
  double sq = 0;
  for (std::size_t i = a; i < b; ++i) sq += y[i] * y[i];
  return std::sqrt(2.0 * sq / static_cast<double>(b - a));
}

std::vector<double> tone(double freq, double rate) {
  std::vector<double> x(static_cast<std::size_t>(rate));
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / rate);
  }
  return x;
}

Outcome data_pipeline() {
  bool alias_ok = true;
  double worst_pass = 1e9, worst_stop = 0;
  for (std::uint32_t rate : {44100u, 22050u, 48000u, 16000u}) {
    const double pass = amplitude(to_mono_8k({tone(3900, rate)}, rate));
    const double stop = amplitude(to_mono_8k({tone(5000, rate)}, rate));
    worst_pass = std::min(worst_pass, pass);
    worst_stop = std::max(worst_stop, stop);
    alias_ok = alias_ok && pass >= kPassbandMin && stop <= kStopbandMax;
  }

  RandomSource rng(31);
  double worst_mean = 0, worst_var = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(2 + rng.index(40000));
    const double offset = rng.uniform(-5, 5), gain = rng.uniform(1e-3, 50);
    for (double& v : x) v = offset + gain * rng.normal();
    standardize(x);
    double mean = 0, var = 0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(x.size());
    worst_mean = std::max(worst_mean, std::abs(mean));
    worst_var = std::max(worst_var, std::abs(var - 1.0));
  }
  std::vector<double> flat(500, 0.3);
  standardize(flat);
  const bool flat_ok = std::all_of(flat.begin(), flat.end(), [](double v) { return v == 0.0; });
  const bool std_ok = worst_mean < kMeanTolerance && worst_var < kVarianceTolerance && flat_ok;

  std::string csv = "slice_file_name,fold,classID\n";
  for (int i = 0; i < 100; ++i) {
    csv += "clip" + std::to_string(i) + ".wav," + std::to_string(1 + i % 10) + "," + std::to_string(i % 10) + "\n";
  }
  const DatasetIndex idx = parse_metadata(csv, "/corpus");
  const FoldSplit s = split_folds(idx, 10, 9);
  std::set<std::string> train, val, test;
  for (std::size_t i : s.train) train.insert(idx.clips[i].id);
  for (std::size_t i : s.validation) val.insert(idx.clips[i].id);
  for (std::size_t i : s.test) test.insert(idx.clips[i].id);
  bool split_ok = train.size() + val.size() + test.size() == 100 && test.size() == 10 && val.size() == 10;
  for (const auto& id : test) split_ok = split_ok && !train.count(id) && !val.count(id);
  for (const auto& id : val) split_ok = split_ok && !train.count(id);

  std::ostringstream detail;
  detail << "3.9 kHz min amplitude " << fmt("%.4f", worst_pass) << ", 5 kHz max " << fmt("%.4f", worst_stop)
         << " over 16/22.05/44.1/48 kHz; standardize |mean| " << fmt("%.1e", worst_mean) << ", |var-1| "
         << fmt("%.1e", worst_var) << "; 100-file split " << train.size() << "/" << val.size() << "/" << test.size()
         << (split_ok ? " disjoint" : " overlapping");
  return verdict(alias_ok && std_ok && split_ok, detail.str());
}

// ---------------------------------------------------------------------------

std::size_t env_size(const char* name, std::size_t fallback) {
  const char* v = std::getenv(name);
  return v && *v ? static_cast<std::size_t>(std::stoul(v)) : fallback;
}

Outcome small_real_data() {
  const char* meta = std::getenv("WAVECNN_CORPUS_META");
  const char* data = std::getenv("WAVECNN_CORPUS_DIR");
  if (!meta || !data || !*meta || !*data) {
    return {Status::skip, "no corpus; set WAVECNN_CORPUS_META and WAVECNN_CORPUS_DIR to run"};
  }
  const std::size_t per_class = env_size("WAVECNN_CORPUS_PER_CLASS", 200);
  const std::size_t epochs = env_size("WAVECNN_CORPUS_EPOCHS", 100);
  const std::size_t divisor = env_size("WAVECNN_CORPUS_WIDTH_DIVISOR", 1);
  const DatasetIndex index = load_metadata(meta, data);

  // The two lowest class ids, first `per_class` clips of each in metadata order.
  std::set<int> labels;
  for (const auto& c : index.clips) labels.insert(c.label);
  if (labels.size() < 2) return {Status::fail, "corpus has fewer than two classes"};
  const int a = *labels.begin(), b = *std::next(labels.begin());
  DatasetIndex subset;
  std::size_t na = 0, nb = 0;
  for (ClipRecord c : index.clips) {
    if (c.label == a && na < per_class) {
      ++na;
      c.label = 0;
      subset.clips.push_back(c);
    } else if (c.label == b && nb < per_class) {
      ++nb;
      c.label = 1;
      subset.clips.push_back(c);
    }
  }
  // Stratified 80/20 split with a fixed permutation.
  std::vector<std::size_t> train_rows, test_rows;
  for (int label : {0, 1}) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < subset.clips.size(); ++i) {
      if (subset.clips[i].label == label) rows.push_back(i);
    }
    const auto perm = epoch_permutation(rows.size(), 2017, 1);
    for (std::size_t i = 0; i < perm.size(); ++i) {
      (i < perm.size() * 4 / 5 ? train_rows : test_rows).push_back(rows[perm[i]]);
    }
  }
  const ClipSet train = load_clips(subset, train_rows);
  const ClipSet test = load_clips(subset, test_rows);

  auto best_accuracy = [&](const std::string& arch, double& final_acc) {
    TrainConfig c;
    c.arch = arch;
    c.num_classes = 2;
    c.epochs = epochs;
    c.width_divisor = divisor;
    c.seed = 3;
    Trainer t(c);
    const std::vector<EpochMetrics> history = t.fit(train, &test);
    double best = 0;
    for (const EpochMetrics& m : history) best = std::max(best, m.test_acc);
    final_acc = history.back().test_acc;
    return best;
  };
  double m5_final = 0, m3_final = 0;
  const double m5_best = best_accuracy("m5", m5_final);
  const double m3_best = best_accuracy("m3", m3_final);
  std::ostringstream detail;
  detail << "classes " << a << "/" << b << ", " << train.size() << " train / " << test.size() << " test clips, "
         << epochs << " epochs, width divisor " << divisor << ": m5 best test acc " << fmt("%.3f", m5_best)
         << " (final " << fmt("%.3f", m5_final)
         << "); informational m3 best " << fmt("%.3f", m3_best) << (m3_best < m5_best ? " < m5" : " >= m5");
  return verdict(m5_best > kCorpusAccuracy, detail.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance report"};
  bool strict = false;
  std::vector<int> only;
  app.add_flag("--strict", strict, "Exit non-zero when any criterion fails");
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"architecture golden values", architecture_golden},
      {"gradient suite", gradient_suite},
      {"oracle equivalence", oracle_equivalence},
      {"overfit smoke", overfit_smoke},
      {"trainability contrast", trainability_contrast},
      {"residual passthrough", residual_passthrough},
      {"checkpoint round trip", checkpoint_round_trip},
      {"data pipeline", data_pipeline},
      {"small real-data smoke", small_real_data},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), number) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("error: ") + e.what()};
    }
    const char* word = o.status == Status::pass ? "PASS" : o.status == Status::skip ? "SKIP" : "FAIL";
    failures += o.status == Status::fail;
    std::printf("criterion %d %s: %s | %s\n", number, criteria[i].first.c_str(), word, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failures);
  return strict ? failures : 0;
}
