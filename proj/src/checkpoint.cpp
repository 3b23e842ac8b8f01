#include <cstring>
#include <fstream>

#include "json.hpp"
#include "vw4c/blob.hpp"
#include "vw4c/errors.hpp"
#include "vw4c/training.hpp"

// Checkpoint container: 8-byte magic, u64 manifest length, JSON manifest,
// then one raw little-endian float64 blob per entry, each followed by the
// CRC32 of its payload bytes. Offsets in the manifest are relative to the
// start of the blob section.
namespace vw4c::train {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'V', 'W', '4', 'C', 'K', 'P', 'T', '1'};

json model_cfg_to_json(const model::ModelConfig& cfg) {
  return {
      {"in_channels", cfg.in_channels},   {"out_channels", cfg.out_channels},
      {"levels", cfg.levels},             {"base_width", cfg.base_width},
      {"latent_dim", cfg.latent_dim},     {"dropout_rate", cfg.dropout_rate},
      {"groups", cfg.groups},             {"input_size", cfg.input_size},
  };
}

model::ModelConfig model_cfg_from_json(const json& j) {
  model::ModelConfig cfg;
  cfg.in_channels = j.at("in_channels").get<int>();
  cfg.out_channels = j.at("out_channels").get<int>();
  cfg.levels = j.at("levels").get<int>();
  cfg.base_width = j.at("base_width").get<int>();
  cfg.latent_dim = j.at("latent_dim").get<int>();
  cfg.dropout_rate = j.at("dropout_rate").get<double>();
  cfg.groups = j.at("groups").get<int>();
  cfg.input_size = j.at("input_size").get<int>();
  return cfg;
}

json metrics_to_json(const CycleMetrics& m) {
  json j = {
      {"cycle", m.cycle},           {"steps", m.steps},
      {"train_l2", m.train_l2},     {"train_kl", m.train_kl},
      {"train_total", m.train_total}, {"val_score", m.val_score},
  };
  j["train_l2_per_variable"] = m.train_l2_per_variable;
  return j;
}

CycleMetrics metrics_from_json(const json& j) {
  CycleMetrics m;
  m.cycle = j.at("cycle").get<int>();
  m.steps = j.at("steps").get<int64_t>();
  m.train_l2 = j.at("train_l2").get<double>();
  m.train_kl = j.at("train_kl").get<double>();
  m.train_total = j.at("train_total").get<double>();
  m.val_score = j.at("val_score").get<double>();
  auto pv = j.at("train_l2_per_variable").get<std::vector<double>>();
  for (size_t v = 0; v < m.train_l2_per_variable.size() && v < pv.size(); ++v) {
    m.train_l2_per_variable[v] = pv[v];
  }
  return m;
}

struct BlobWriter {
  json index = json::array();
  std::vector<uint8_t> section;

  void add(const std::string& name, const std::vector<double>& values) {
    const size_t bytes = values.size() * sizeof(double);
    json entry = {{"name", name}, {"count", values.size()}, {"offset", section.size()}};
    const size_t at = section.size();
    section.resize(at + bytes + 4);
    std::memcpy(section.data() + at, values.data(), bytes);
    const uint32_t crc = io::crc32(section.data() + at, bytes);
    std::memcpy(section.data() + at + bytes, &crc, 4);
    entry["crc32"] = crc;
    index.push_back(std::move(entry));
  }
};

struct BlobReader {
  const std::vector<uint8_t>& section;
  const json& index;
  size_t cursor = 0;

  std::vector<double> take(const std::string& name, size_t expected_count,
                           const std::string& path) {
    if (cursor >= index.size()) {
      throw IoError("checkpoint " + path + " is missing blob " + name);
    }
    const json& entry = index[cursor++];
    if (entry.at("name").get<std::string>() != name) {
      throw IoError("checkpoint " + path + ": expected blob " + name + ", found " +
                    entry.at("name").get<std::string>());
    }
    const size_t count = entry.at("count").get<size_t>();
    if (count != expected_count) {
      throw IoError("checkpoint " + path + ": blob " + name + " has " + std::to_string(count) +
                    " values, config implies " + std::to_string(expected_count));
    }
    const size_t offset = entry.at("offset").get<size_t>();
    const size_t bytes = count * sizeof(double);
    if (offset + bytes + 4 > section.size()) {
      throw IoError("checkpoint " + path + " is truncated at blob " + name);
    }
    const uint32_t actual = io::crc32(section.data() + offset, bytes);
    uint32_t stored = 0;
    std::memcpy(&stored, section.data() + offset + bytes, 4);
    if (stored != actual || stored != entry.at("crc32").get<uint32_t>()) {
      throw IoError("checksum mismatch in checkpoint " + path + " blob " + name);
    }
    std::vector<double> values(count);
    std::memcpy(values.data(), section.data() + offset, bytes);
    return values;
  }
};

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  BlobWriter blobs;
  ckpt.params.for_each([&blobs](const std::string& name, const ParamTensor& p) {
    blobs.add("param." + name, p.value);
  });

  json manifest = {
      {"format", "vw4c-checkpoint"},
      {"version", 1},
      {"model", model_cfg_to_json(ckpt.model_cfg)},
  };

  if (ckpt.has_training) {
    size_t idx = 0;
    ckpt.params.for_each([&](const std::string& name, const ParamTensor&) {
      blobs.add("adam.m." + name, ckpt.opt.m.at(idx));
      blobs.add("adam.v." + name, ckpt.opt.v.at(idx));
      ++idx;
    });
    json history = json::array();
    for (const CycleMetrics& m : ckpt.history) history.push_back(metrics_to_json(m));
    manifest["training"] = {
        {"adam", {{"beta1", ckpt.opt.cfg.beta1},
                  {"beta2", ckpt.opt.cfg.beta2},
                  {"eps", ckpt.opt.cfg.eps},
                  {"step", ckpt.opt.step}}},
        {"schedule", {{"cycle_index", ckpt.sched.cycle_index},
                      {"step_in_cycle", ckpt.sched.step_in_cycle},
                      {"steps_per_cycle", ckpt.sched.steps_per_cycle},
                      {"lr_max", ckpt.sched.lr_max},
                      {"lr_min", ckpt.sched.lr_min},
                      {"current_lr", ckpt.sched.current_lr}}},
        {"rng", {{"seed", ckpt.rng_seed}, {"position", ckpt.rng_position}}},
        {"best_val_score", std::isfinite(ckpt.best_val_score) ? json(ckpt.best_val_score)
                                                              : json(nullptr)},
        {"cycles_completed", ckpt.cycles_completed},
        {"finetuned", ckpt.finetuned},
        {"history", std::move(history)},
    };
  }
  manifest["blobs"] = std::move(blobs.index);

  const std::string text = manifest.dump();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(kMagic, 8);
  const uint64_t len = text.size();
  f.write(reinterpret_cast<const char*>(&len), 8);
  f.write(text.data(), std::streamsize(text.size()));
  f.write(reinterpret_cast<const char*>(blobs.section.data()),
          std::streamsize(blobs.section.size()));
  if (!f) throw IoError("write failed: " + path);
}

void save_model_checkpoint(const model::ModelConfig& cfg, const model::VUNetParams& params,
                           const std::string& path) {
  Checkpoint ckpt;
  ckpt.model_cfg = cfg;
  ckpt.params = params;
  ckpt.has_training = false;
  save_checkpoint(ckpt, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  char magic[8];
  if (!f.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw IoError("not a checkpoint file: " + path);
  }
  uint64_t len = 0;
  if (!f.read(reinterpret_cast<char*>(&len), 8)) throw IoError("truncated checkpoint: " + path);
  std::string text(len, '\0');
  if (!f.read(text.data(), std::streamsize(len))) {
    throw IoError("truncated checkpoint: " + path);
  }
  std::vector<uint8_t> section((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());

  json manifest;
  try {
    manifest = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError("malformed checkpoint manifest in " + path + ": " + e.what());
  }
  if (manifest.value("format", "") != "vw4c-checkpoint") {
    throw IoError("not a checkpoint manifest: " + path);
  }
  if (manifest.value("version", 0) != 1) {
    throw IoError("checkpoint version mismatch in " + path);
  }

  Checkpoint ckpt;
  ckpt.model_cfg = model_cfg_from_json(manifest.at("model"));
  try {
    ckpt.model_cfg.validate();
  } catch (const ConfigError& e) {
    throw IoError("checkpoint " + path + " declares an invalid model config: " + e.what());
  }

  RngStream init_rng(0);
  ckpt.params = model::init_params(ckpt.model_cfg, init_rng);

  BlobReader reader{section, manifest.at("blobs")};
  ckpt.params.for_each([&](const std::string& name, ParamTensor& p) {
    p.value = reader.take("param." + name, p.value.size(), path);
    p.zero_grad();
  });

  if (manifest.contains("training")) {
    const json& tr = manifest.at("training");
    ckpt.has_training = true;
    ckpt.opt.cfg.beta1 = tr.at("adam").at("beta1").get<double>();
    ckpt.opt.cfg.beta2 = tr.at("adam").at("beta2").get<double>();
    ckpt.opt.cfg.eps = tr.at("adam").at("eps").get<double>();
    ckpt.opt.step = tr.at("adam").at("step").get<int64_t>();
    ckpt.params.for_each([&](const std::string& name, ParamTensor& p) {
      ckpt.opt.m.push_back(reader.take("adam.m." + name, p.value.size(), path));
      ckpt.opt.v.push_back(reader.take("adam.v." + name, p.value.size(), path));
    });
    const json& sc = tr.at("schedule");
    ckpt.sched.cycle_index = sc.at("cycle_index").get<int64_t>();
    ckpt.sched.step_in_cycle = sc.at("step_in_cycle").get<int64_t>();
    ckpt.sched.steps_per_cycle = sc.at("steps_per_cycle").get<int64_t>();
    ckpt.sched.lr_max = sc.at("lr_max").get<double>();
    ckpt.sched.lr_min = sc.at("lr_min").get<double>();
    ckpt.sched.current_lr = sc.at("current_lr").get<double>();
    ckpt.rng_seed = tr.at("rng").at("seed").get<uint64_t>();
    ckpt.rng_position = tr.at("rng").at("position").get<uint64_t>();
    ckpt.best_val_score = tr.at("best_val_score").is_null()
                              ? std::numeric_limits<double>::infinity()
                              : tr.at("best_val_score").get<double>();
    ckpt.cycles_completed = tr.at("cycles_completed").get<int>();
    ckpt.finetuned = tr.at("finetuned").get<bool>();
    for (const json& m : tr.at("history")) ckpt.history.push_back(metrics_from_json(m));
  }
  return ckpt;
}

}  // namespace vw4c::train
