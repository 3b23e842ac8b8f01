#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vw4c/dataset.hpp"
#include "vw4c/losses.hpp"
#include "vw4c/tensor.hpp"

// Scoring with the masked per-variable weighted metric, plus the mean and
// persistence baselines used as comparison points.
namespace vw4c::eval {

struct ScoreReport {
  double aggregate = 0.0;
  std::array<double, loss::kNumVariables> per_variable{};
  std::vector<double> per_leadtime;                       // one per lead time
  std::array<double, loss::kNumVariables> coverage{};     // valid-pixel fraction
  int64_t samples = 0;
};

// Streaming accumulation over samples; the aggregate is the mean over
// samples of the same masked weighted expression the loss uses.
class ScoreAccumulator {
public:
  explicit ScoreAccumulator(loss::VariableWeights weights = {}) : weights_(weights) {}

  void add(const Grid4D& pred, const Grid4D& target, const Mask4D& mask);
  ScoreReport report() const;  // throws ConfigError on an empty sample set

private:
  loss::VariableWeights weights_;
  int64_t samples_ = 0;
  int leads_ = 0;
  std::vector<double> term_sum_;  // per (lead, variable)
  std::array<double, loss::kNumVariables> valid_sum_{};
  std::array<double, loss::kNumVariables> pixel_sum_{};
};

ScoreReport score(const std::vector<Grid4D>& preds, const std::vector<Grid4D>& targets,
                  const std::vector<Mask4D>& masks, const loss::VariableWeights& weights = {});

// Per-pixel temporal mean of the training frames, per region and variable,
// in normalized space; constant across lead times. Pixels that are never
// valid fall back to the variable's region-wide mean.
class MeanBaseline {
public:
  struct RegionDays {
    const data::RegionDataset* ds = nullptr;
    std::vector<int> days;
  };

  static MeanBaseline fit(const std::vector<RegionDays>& train);

  Grid4D predict(const std::string& region_id) const;  // 1 x 128 x H x W

private:
  struct Maps {
    int height = 0, width = 0;
    std::array<std::vector<double>, loss::kNumVariables> mean;
  };
  std::map<std::string, Maps> maps_;
};

// Repeats the last input frame's target-variable channels across all lead
// times. Missing input pixels come through as 0 (the fill value).
Grid4D persistence_baseline(const data::SampleWindow& window, const data::FeatureSpec& spec);

enum class ReportFormat { text, csv };

struct NamedReport {
  std::string name;
  std::optional<double> validation;
  ScoreReport test;
};

std::string render_report(const std::vector<NamedReport>& rows, ReportFormat format);

}  // namespace vw4c::eval
