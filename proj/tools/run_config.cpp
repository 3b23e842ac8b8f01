#include "run_config.hpp"

#include <fstream>
#include <set>

#include "vw4c/errors.hpp"

namespace vw4c::cli {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& section) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) {
      throw ConfigError("config: unknown key '" + key + "' in section '" + section + "'");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

json RunConfig::to_json() const {
  json weights = {
      {"temperature", loss.weights.temperature},
      {"crr_intensity", loss.weights.crr_intensity},
      {"cma", loss.weights.cma},
      {"asii_turb_trop_prob", loss.weights.asii_turb_trop_prob},
  };
  return {
      {"model",
       {{"in_channels", model.in_channels},
        {"out_channels", model.out_channels},
        {"levels", model.levels},
        {"base_width", model.base_width},
        {"latent_dim", model.latent_dim},
        {"dropout_rate", model.dropout_rate},
        {"groups", model.groups},
        {"input_size", model.input_size}}},
      {"loss",
       {{"kl_weight", loss.kl_weight},
        {"kl_formula", loss.kl_formula == loss::KlFormula::paper ? "paper" : "standard"},
        {"weights", weights}}},
      {"train",
       {{"batch_size", train.batch_size},
        {"cycles_max", train.cycles_max},
        {"epochs_per_cycle", train.epochs_per_cycle},
        {"early_stop", train.early_stop},
        {"finetune_on_validation", train.finetune_on_validation},
        {"lr_max", train.lr_max},
        {"lr_min", train.lr_min},
        {"seed", train.seed}}},
      {"features",
       {{"dynamic", features.dynamic},
        {"statics", features.statics},
        {"use_ctth_alt", features.use_ctth_alt},
        {"interpolate_temperature", features.interpolate_temperature},
        {"interpolate_ctth_pres", features.interpolate_ctth_pres}}},
      {"window_stride", window_stride},
      {"val_days", val_days},
  };
}

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  reject_unknown(j, {"model", "loss", "train", "features", "window_stride", "val_days"},
                 "(top level)");

  if (j.contains("model")) {
    const json& m = j.at("model");
    reject_unknown(m,
                   {"in_channels", "out_channels", "levels", "base_width", "latent_dim",
                    "dropout_rate", "groups", "input_size"},
                   "model");
    read(m, "in_channels", cfg.model.in_channels);
    read(m, "out_channels", cfg.model.out_channels);
    read(m, "levels", cfg.model.levels);
    read(m, "base_width", cfg.model.base_width);
    read(m, "latent_dim", cfg.model.latent_dim);
    read(m, "dropout_rate", cfg.model.dropout_rate);
    read(m, "groups", cfg.model.groups);
    read(m, "input_size", cfg.model.input_size);
  }

  if (j.contains("loss")) {
    const json& l = j.at("loss");
    reject_unknown(l, {"kl_weight", "kl_formula", "weights"}, "loss");
    read(l, "kl_weight", cfg.loss.kl_weight);
    if (l.contains("kl_formula")) {
      const std::string f = l.at("kl_formula").get<std::string>();
      if (f == "paper") {
        cfg.loss.kl_formula = loss::KlFormula::paper;
      } else if (f == "standard") {
        cfg.loss.kl_formula = loss::KlFormula::standard;
      } else {
        throw ConfigError("config: kl_formula must be 'paper' or 'standard', got '" + f + "'");
      }
    }
    if (l.contains("weights")) {
      const json& w = l.at("weights");
      reject_unknown(w, {"temperature", "crr_intensity", "cma", "asii_turb_trop_prob"},
                     "loss.weights");
      read(w, "temperature", cfg.loss.weights.temperature);
      read(w, "crr_intensity", cfg.loss.weights.crr_intensity);
      read(w, "cma", cfg.loss.weights.cma);
      read(w, "asii_turb_trop_prob", cfg.loss.weights.asii_turb_trop_prob);
    }
  }

  if (j.contains("train")) {
    const json& t = j.at("train");
    reject_unknown(t,
                   {"batch_size", "cycles_max", "epochs_per_cycle", "early_stop",
                    "finetune_on_validation", "lr_max", "lr_min", "seed"},
                   "train");
    read(t, "batch_size", cfg.train.batch_size);
    read(t, "cycles_max", cfg.train.cycles_max);
    read(t, "epochs_per_cycle", cfg.train.epochs_per_cycle);
    read(t, "early_stop", cfg.train.early_stop);
    read(t, "finetune_on_validation", cfg.train.finetune_on_validation);
    read(t, "lr_max", cfg.train.lr_max);
    read(t, "lr_min", cfg.train.lr_min);
    read(t, "seed", cfg.train.seed);
  }

  if (j.contains("features")) {
    const json& f = j.at("features");
    reject_unknown(f,
                   {"dynamic", "statics", "use_ctth_alt", "interpolate_temperature",
                    "interpolate_ctth_pres"},
                   "features");
    read(f, "dynamic", cfg.features.dynamic);
    read(f, "statics", cfg.features.statics);
    read(f, "use_ctth_alt", cfg.features.use_ctth_alt);
    read(f, "interpolate_temperature", cfg.features.interpolate_temperature);
    read(f, "interpolate_ctth_pres", cfg.features.interpolate_ctth_pres);
  }

  read(j, "window_stride", cfg.window_stride);
  read(j, "val_days", cfg.val_days);
  if (cfg.window_stride < 1) throw ConfigError("config: window_stride must be >= 1");
  if (cfg.val_days < 0) throw ConfigError("config: val_days must be >= 0");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config: malformed JSON in " + path + ": " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace vw4c::cli
