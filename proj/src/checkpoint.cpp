// SPDX-License-Identifier: Apache-2.0
//
// File layout: 8-byte magic "WCNNCKPT", u64 little-endian manifest length,
// JSON manifest, then float32 little-endian payloads in manifest order.

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "wavecnn/binary_io.hpp"
#include "wavecnn/train.hpp"

namespace wavecnn {

namespace {

constexpr char kMagic[8] = {'W', 'C', 'N', 'N', 'C', 'K', 'P', 'T'};

using nlohmann::json;

json config_to_json(const TrainConfig& c) {
  return json{{"arch", c.arch},
              {"num_classes", c.num_classes},
              {"width_divisor", c.width_divisor},
              {"clip_samples", c.clip_samples},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"alpha", c.adam.alpha},
              {"beta1", c.adam.beta1},
              {"beta2", c.adam.beta2},
              {"epsilon", c.adam.epsilon},
              {"l2", c.l2},
              {"l2_on_batchnorm", c.l2_on_batchnorm},
              {"seed", c.seed},
              {"test_fold", c.test_fold},
              {"validation_fold", c.validation_fold},
              {"checkpoint_path", c.checkpoint_path},
              {"checkpoint_every", c.checkpoint_every},
              {"log_path", c.log_path},
              {"standardization", c.standardization == Standardization::corpus ? "corpus" : "per_clip"},
              {"corpus_mean", c.corpus_stats.mean},
              {"corpus_stddev", c.corpus_stats.stddev}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.arch = j.at("arch").get<std::string>();
  c.num_classes = j.at("num_classes").get<std::size_t>();
  c.width_divisor = j.at("width_divisor").get<std::size_t>();
  c.clip_samples = j.at("clip_samples").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.adam.alpha = j.at("alpha").get<double>();
  c.adam.beta1 = j.at("beta1").get<double>();
  c.adam.beta2 = j.at("beta2").get<double>();
  c.adam.epsilon = j.at("epsilon").get<double>();
  c.l2 = j.at("l2").get<double>();
  c.l2_on_batchnorm = j.at("l2_on_batchnorm").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.test_fold = j.at("test_fold").get<int>();
  c.validation_fold = j.at("validation_fold").get<int>();
  c.checkpoint_path = j.at("checkpoint_path").get<std::string>();
  c.checkpoint_every = j.at("checkpoint_every").get<std::size_t>();
  c.log_path = j.at("log_path").get<std::string>();
  const std::string mode = j.at("standardization").get<std::string>();
  if (mode != "corpus" && mode != "per_clip") throw CheckpointError("unknown standardization '" + mode + "'");
  c.standardization = mode == "corpus" ? Standardization::corpus : Standardization::per_clip;
  c.corpus_stats.mean = j.at("corpus_mean").get<double>();
  c.corpus_stats.stddev = j.at("corpus_stddev").get<double>();
  return c;
}

void require_match(const std::string& name, const NamedTensor* stored, const Shape& expected) {
  if (!stored) throw CheckpointMismatchError("checkpoint has no tensor '" + name + "'");
  if (!(stored->value.shape() == expected)) {
    throw CheckpointMismatchError("tensor '" + name + "' has shape " + stored->value.shape().to_string() +
                                  " in the checkpoint but " + expected.to_string() + " in the model");
  }
}

}  // namespace

const NamedTensor* Checkpoint::find(std::string_view name) const {
  for (const NamedTensor& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

Checkpoint capture_checkpoint(const ModelGraph& model, const AdamState<float>* adam, std::size_t epoch,
                              const RandomSource* rng, const TrainConfig& config) {
  Checkpoint c;
  c.config = config;
  c.config.arch = model.name();
  c.config.num_classes = model.num_classes();
  c.config.width_divisor = model.spec().width_divisor;
  c.config.clip_samples = model.spec().input_time;
  c.epoch = epoch;
  if (rng) c.rng_state = rng->state();
  for (const Parameter<float>& p : model.parameters()) c.tensors.push_back({p.name, p.value});
  for (const RunningStats<float>& s : model.running_stats()) {
    c.tensors.push_back({s.name + ".running_mean", s.stats.running_mean});
    c.tensors.push_back({s.name + ".running_var", s.stats.running_var});
  }
  if (adam) {
    c.adam = adam->config;
    c.adam_step = adam->step;
    for (std::size_t i = 0; i < adam->m.size(); ++i) {
      c.tensors.push_back({"adam.m/" + model.parameters()[i].name, adam->m[i]});
    }
    for (std::size_t i = 0; i < adam->v.size(); ++i) {
      c.tensors.push_back({"adam.v/" + model.parameters()[i].name, adam->v[i]});
    }
  }
  return c;
}

std::vector<std::byte> encode_checkpoint(const Checkpoint& c) {
  json manifest;
  manifest["version"] = c.version;
  manifest["arch"] = c.config.arch;
  manifest["config"] = config_to_json(c.config);
  manifest["epoch"] = c.epoch;
  manifest["rng_state"] = c.rng_state;
  manifest["adam"] = {{"step", c.adam_step},
                      {"alpha", c.adam.alpha},
                      {"beta1", c.adam.beta1},
                      {"beta2", c.adam.beta2},
                      {"epsilon", c.adam.epsilon}};
  json entries = json::array();
  std::uint64_t offset = 0;
  for (const NamedTensor& t : c.tensors) {
    entries.push_back(
        {{"name", t.name}, {"shape", t.value.shape().dims()}, {"offset", offset}, {"count", t.value.size()}});
    offset += 4 * t.value.size();
  }
  manifest["tensors"] = entries;
  manifest["payload_bytes"] = offset;

  const std::string text = manifest.dump(1);
  std::vector<std::byte> out;
  out.reserve(16 + text.size() + offset);
  for (char ch : kMagic) out.push_back(static_cast<std::byte>(ch));
  append_u64_le(out, text.size());
  for (char ch : text) out.push_back(static_cast<std::byte>(ch));
  for (const NamedTensor& t : c.tensors) append_f32_le(out, t.value.data());
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::byte> bytes) {
  if (bytes.size() < 16) throw CheckpointTruncatedError("checkpoint shorter than its 16-byte header");
  if (std::memcmp(bytes.data(), kMagic, 8) != 0) throw CheckpointError("not a checkpoint file (bad magic)");
  const std::uint64_t manifest_len = read_u64_le(bytes.subspan(8, 8));
  if (manifest_len > bytes.size() - 16) {
    throw CheckpointTruncatedError("checkpoint manifest needs " + std::to_string(manifest_len) + " bytes, " +
                                   std::to_string(bytes.size() - 16) + " present");
  }
  const auto* text = reinterpret_cast<const char*>(bytes.data() + 16);
  json manifest;
  try {
    manifest = json::parse(text, text + manifest_len);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint manifest is not valid JSON: ") + e.what());
  }

  Checkpoint c;
  try {
    c.version = manifest.at("version").get<int>();
    if (c.version != kCheckpointVersion) {
      throw CheckpointVersionError("checkpoint format version " + std::to_string(c.version) +
                                   " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    c.config = config_from_json(manifest.at("config"));
    c.epoch = manifest.at("epoch").get<std::size_t>();
    c.rng_state = manifest.at("rng_state").get<std::string>();
    const json& a = manifest.at("adam");
    c.adam_step = a.at("step").get<std::uint64_t>();
    c.adam.alpha = a.at("alpha").get<double>();
    c.adam.beta1 = a.at("beta1").get<double>();
    c.adam.beta2 = a.at("beta2").get<double>();
    c.adam.epsilon = a.at("epsilon").get<double>();

    const std::span<const std::byte> payload = bytes.subspan(16 + manifest_len);
    const auto payload_bytes = manifest.at("payload_bytes").get<std::uint64_t>();
    if (payload_bytes > payload.size()) {
      throw CheckpointTruncatedError("checkpoint payload needs " + std::to_string(payload_bytes) + " bytes, " +
                                     std::to_string(payload.size()) + " present");
    }
    for (const json& e : manifest.at("tensors")) {
      const auto dims = e.at("shape").get<std::vector<std::size_t>>();
      const auto offset = e.at("offset").get<std::uint64_t>();
      const auto count = e.at("count").get<std::uint64_t>();
      NamedTensor t{e.at("name").get<std::string>(), TensorF(Shape(dims))};
      if (t.value.size() != count) throw CheckpointError("tensor '" + t.name + "' count disagrees with its shape");
      if (offset + 4 * count > payload_bytes) {
        throw CheckpointTruncatedError("tensor '" + t.name + "' extends past the payload");
      }
      read_f32_le(payload.subspan(offset, 4 * count), t.value.data());
      c.tensors.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint manifest is missing fields: ") + e.what());
  } catch (const ShapeError& e) {
    throw CheckpointError(std::string("checkpoint manifest has an invalid shape: ") + e.what());
  }
  return c;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const std::vector<std::byte> bytes = encode_checkpoint(checkpoint);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(std::as_bytes(std::span(raw)));
}

void apply_checkpoint(const Checkpoint& c, ModelGraph& model, AdamState<float>* adam) {
  for (const Parameter<float>& p : model.parameters()) require_match(p.name, c.find(p.name), p.value.shape());
  for (const RunningStats<float>& s : model.running_stats()) {
    const Shape shape{s.stats.running_mean.size()};
    require_match(s.name + ".running_mean", c.find(s.name + ".running_mean"), shape);
    require_match(s.name + ".running_var", c.find(s.name + ".running_var"), shape);
  }
  const bool has_moments = c.adam_step > 0;
  if (adam && has_moments) {
    for (const Parameter<float>& p : model.parameters()) {
      require_match("adam.m/" + p.name, c.find("adam.m/" + p.name), p.value.shape());
      require_match("adam.v/" + p.name, c.find("adam.v/" + p.name), p.value.shape());
    }
  }

  for (Parameter<float>& p : model.parameters()) p.value = c.find(p.name)->value;
  for (RunningStats<float>& s : model.running_stats()) {
    s.stats.running_mean = c.find(s.name + ".running_mean")->value;
    s.stats.running_var = c.find(s.name + ".running_var")->value;
  }
  if (adam) {
    adam->config = c.adam;
    adam->step = c.adam_step;
    adam->m.clear();
    adam->v.clear();
    if (has_moments) {
      for (const Parameter<float>& p : model.parameters()) {
        adam->m.push_back(c.find("adam.m/" + p.name)->value);
        adam->v.push_back(c.find("adam.v/" + p.name)->value);
      }
    }
  }
}

ModelGraph model_from_checkpoint(const Checkpoint& c) {
  RandomSource unused(0);
  ModelGraph model = ModelGraph::build(c.config.arch, c.config.build_options(), unused);
  apply_checkpoint(c, model);
  return model;
}

}  // namespace wavecnn
