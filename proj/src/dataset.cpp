// SPDX-License-Identifier: Apache-2.0

#include "wavecnn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include "wavecnn/audio.hpp"
#include "wavecnn/binary_io.hpp"
#include "wavecnn/parallel.hpp"
#include "wavecnn/random.hpp"

namespace wavecnn {

namespace {

// Splits one CSV record; double quotes may wrap fields and "" escapes a quote.
std::vector<std::string> csv_fields(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

int parse_int(const std::string& s, const std::string& what, std::size_t line) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("metadata line " + std::to_string(line) + ": " + what + " '" + s + "' is not an integer");
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::optional<std::vector<float>> read_cached(const std::filesystem::path& file, std::size_t n) {
  std::error_code ec;
  if (std::filesystem::file_size(file, ec) != 4 * n || ec) return std::nullopt;
  const std::vector<std::byte> bytes = read_file_bytes(file);
  std::vector<float> out(n);
  read_f32_le(bytes, out);
  return out;
}

void write_cached(const std::filesystem::path& file, std::span<const float> values) {
  std::vector<std::byte> bytes;
  append_f32_le(bytes, values);
  const std::filesystem::path tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write cache file " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  std::filesystem::rename(tmp, file);
}

}  // namespace

std::size_t DatasetIndex::num_classes() const {
  int top = -1;
  for (const ClipRecord& c : clips) top = std::max(top, c.label);
  return std::max<std::size_t>(class_names.size(), static_cast<std::size_t>(top + 1));
}

DatasetIndex parse_metadata(std::string_view csv_text, const std::filesystem::path& data_dir) {
  std::istringstream in{std::string(csv_text)};
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("metadata is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = csv_fields(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* need : {"slice_file_name", "fold", "classID"}) {
    if (!col.count(need)) throw ConfigError(std::string("metadata header lacks column '") + need + "'");
  }
  const std::optional<std::size_t> class_col = col.count("class") ? std::optional(col["class"]) : std::nullopt;

  DatasetIndex index;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> f = csv_fields(line);
    if (f.size() < header.size()) {
      throw ConfigError("metadata line " + std::to_string(line_no) + " has " + std::to_string(f.size()) +
                        " fields, header has " + std::to_string(header.size()));
    }
    ClipRecord r;
    r.id = f[col["slice_file_name"]];
    r.fold = parse_int(f[col["fold"]], "fold", line_no);
    r.label = parse_int(f[col["classID"]], "classID", line_no);
    if (r.label < 0) throw ConfigError("metadata line " + std::to_string(line_no) + ": negative classID");
    if (r.fold < 1) throw ConfigError("metadata line " + std::to_string(line_no) + ": fold must be >= 1");
    r.path = data_dir / ("fold" + std::to_string(r.fold)) / r.id;
    if (class_col) {
      const auto label = static_cast<std::size_t>(r.label);
      if (index.class_names.size() <= label) index.class_names.resize(label + 1);
      index.class_names[label] = f[*class_col];
    }
    index.clips.push_back(std::move(r));
  }
  return index;
}

DatasetIndex load_metadata(const std::filesystem::path& csv_path, const std::filesystem::path& data_dir) {
  std::ifstream in(csv_path);
  if (!in) throw ConfigError("cannot open metadata " + csv_path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_metadata(text.str(), data_dir);
}

FoldSplit split_folds(const DatasetIndex& index, int test_fold, int validation_fold) {
  if (test_fold < 1) throw ConfigError("test fold must be >= 1");
  if (validation_fold == test_fold) throw ConfigError("validation fold must differ from the test fold");
  FoldSplit s;
  for (std::size_t i = 0; i < index.clips.size(); ++i) {
    const int fold = index.clips[i].fold;
    if (fold == test_fold) {
      s.test.push_back(i);
    } else if (validation_fold > 0 && fold == validation_fold) {
      s.validation.push_back(i);
    } else {
      s.train.push_back(i);
    }
  }
  return s;
}

std::string cache_key(std::span<const std::byte> file_bytes, std::size_t clip_samples) {
  std::uint64_t h = fnv1a(file_bytes);
  const std::uint64_t n = clip_samples;
  h = fnv1a(std::as_bytes(std::span(&n, 1)), h);
  return hex64(h);
}

ClipSet load_clips(const DatasetIndex& index, std::span<const std::size_t> rows, const LoadOptions& options) {
  ClipSet set;
  set.num_classes = index.num_classes();
  set.samples.resize(rows.size());
  set.labels.resize(rows.size());
  set.ids.resize(rows.size());
  const bool corpus = options.standardization == Standardization::corpus;
  if (corpus) set.valid.resize(rows.size());
  if (!options.cache_dir.empty() && !corpus) std::filesystem::create_directories(options.cache_dir);

  std::vector<std::string> failures(rows.size());
  parallel_for(rows.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const ClipRecord& rec = index.clips.at(rows[i]);
      set.labels[i] = rec.label;
      set.ids[i] = rec.id;
      try {
        const std::vector<std::byte> bytes = read_file_bytes(rec.path);
        if (corpus) {
          std::vector<double> x = resample_wav(bytes);
          set.valid[i] = std::min(x.size(), options.clip_samples);
          x = fix_length(std::move(x), options.clip_samples);
          set.samples[i].assign(x.begin(), x.end());
        } else if (!options.cache_dir.empty()) {
          const std::filesystem::path file = options.cache_dir / (cache_key(bytes, options.clip_samples) + ".f32");
          if (auto cached = read_cached(file, options.clip_samples)) {
            set.samples[i] = std::move(*cached);
            continue;
          }
          set.samples[i] = preprocess_wav(bytes, options.clip_samples);
          write_cached(file, set.samples[i]);
        } else {
          set.samples[i] = preprocess_wav(bytes, options.clip_samples);
        }
      } catch (const std::exception& e) {
        failures[i] = rec.path.string() + ": " + e.what();
      }
    }
  });
  for (const std::string& f : failures) {
    if (!f.empty()) throw Error("failed to load clip " + f);
  }
  return set;
}

CorpusStats corpus_statistics(const ClipSet& raw) {
  if (raw.valid.size() != raw.size()) throw ConfigError("corpus statistics need clips loaded without standardization");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    for (std::size_t t = 0; t < raw.valid[i]; ++t) sum += raw.samples[i][t];
    n += raw.valid[i];
  }
  if (n == 0) throw ShapeError("corpus statistics over zero samples");
  CorpusStats s;
  s.mean = sum / static_cast<double>(n);
  double sq = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    for (std::size_t t = 0; t < raw.valid[i]; ++t) {
      const double d = raw.samples[i][t] - s.mean;
      sq += d * d;
    }
  }
  s.stddev = std::max(std::sqrt(sq / static_cast<double>(n)), 1e-8);
  return s;
}

void apply_standardization(ClipSet& raw, const CorpusStats& stats) {
  if (raw.valid.size() != raw.size()) throw ConfigError("clips were already standardized per clip");
  for (std::size_t i = 0; i < raw.size(); ++i) {
    for (std::size_t t = 0; t < raw.valid[i]; ++t) {
      raw.samples[i][t] = static_cast<float>((raw.samples[i][t] - stats.mean) / stats.stddev);
    }
  }
  raw.valid.clear();
}

std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  RandomSource rng(RandomSource::derive(seed, epoch));
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.index(i)]);
  return p;
}

std::vector<std::vector<std::size_t>> batch_plan(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                                 std::uint64_t epoch,
                                                 const std::function<void(const std::string&)>& warn) {
  if (batch_size < 2) throw ConfigError("batch size must be at least 2");
  const std::vector<std::size_t> perm = epoch_permutation(n, seed, epoch);
  std::vector<std::vector<std::size_t>> plan;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t stop = std::min(n, start + batch_size);
    if (stop - start == 1) {
      const std::string msg = "dropping final batch of 1 row (clip " + std::to_string(perm[start]) +
                              "); batch normalization needs at least 2";
      if (warn) {
        warn(msg);
      } else {
        log_warning(msg);
      }
      break;
    }
    plan.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                      perm.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return plan;
}

Batch assemble_batch(const ClipSet& clips, std::span<const std::size_t> rows) {
  if (rows.empty()) throw ShapeError("empty batch");
  const std::size_t t = clips.samples.at(rows[0]).size();
  Batch b;
  b.x = TensorF(Shape{rows.size(), t, 1});
  b.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::vector<float>& s = clips.samples.at(rows[i]);
    if (s.size() != t) throw ShapeError("clips in one batch have different lengths");
    std::copy(s.begin(), s.end(), b.x.data().begin() + static_cast<std::ptrdiff_t>(i * t));
    b.labels.push_back(clips.labels.at(rows[i]));
  }
  return b;
}

ClipSet synthetic_sine_noise(std::size_t count, std::uint64_t seed, std::size_t clip_samples) {
  ClipSet set;
  set.num_classes = 2;
  RandomSource rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> x(clip_samples);
    const int label = static_cast<int>(i % 2);
    if (label == 0) {
      const double freq = rng.uniform(100.0, 3000.0);
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      for (std::size_t t = 0; t < clip_samples; ++t) {
        x[t] = std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(t) / kTargetRate + phase);
      }
    } else {
      for (double& v : x) v = rng.normal();
    }
    standardize(x);
    set.samples.emplace_back(x.begin(), x.end());
    set.labels.push_back(label);
    set.ids.push_back((label == 0 ? "sine-" : "noise-") + std::to_string(i));
  }
  return set;
}

void log_warning(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

}  // namespace wavecnn
