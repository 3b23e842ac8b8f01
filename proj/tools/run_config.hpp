#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "vw4c/dataset.hpp"
#include "vw4c/losses.hpp"
#include "vw4c/model.hpp"
#include "vw4c/training.hpp"

// Merged run configuration: JSON config file plus command-line overrides,
// resolved before any command executes and written next to the outputs.
namespace vw4c::cli {

struct RunConfig {
  model::ModelConfig model;
  loss::LossConfig loss;
  train::TrainRunConfig train;
  data::FeatureSpec features;
  int window_stride = 1;
  int val_days = 2;

  nlohmann::json to_json() const;
};

// Parses the schema strictly: unknown keys are configuration errors.
RunConfig load_run_config(const std::string& path);
RunConfig run_config_from_json(const nlohmann::json& j);

}  // namespace vw4c::cli
