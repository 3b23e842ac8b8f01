#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "vw4c/dataset.hpp"
#include "vw4c/losses.hpp"
#include "vw4c/model.hpp"
#include "vw4c/rng.hpp"

// The training protocol: Adam updates under cyclic cosine annealing with
// warm restarts (one cycle = 2 epochs by default), cycle-level early
// stopping on the validation score, an optional final cycle on train plus
// validation data, and bit-exact checkpointing.
namespace vw4c::train {

// ---------------------------------------------------------------------------
// optimizer
// ---------------------------------------------------------------------------

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig cfg;
  int64_t step = 0;
  // first/second moment buffers in canonical parameter order
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  void init(const model::VUNetParams& params);
};

// One Adam update from the gradients currently stored in the parameters.
void adam_step(model::VUNetParams& params, AdamState& state, double lr);

// ---------------------------------------------------------------------------
// learning-rate schedule
// ---------------------------------------------------------------------------

struct ScheduleState {
  int64_t cycle_index = 0;
  int64_t step_in_cycle = 0;
  int64_t steps_per_cycle = 1;
  double lr_max = 2e-4;
  double lr_min = 0.0;
  double current_lr = 2e-4;
};

// lr = lr_min + (lr_max - lr_min)/2 * (1 + cos(pi * step_in_cycle / steps_per_cycle))
double cyclic_cosine_lr(const ScheduleState& state);

// Advances one step; wraps into the next cycle at the boundary.
void schedule_advance(ScheduleState& state);

// ---------------------------------------------------------------------------
// run configuration and bookkeeping
// ---------------------------------------------------------------------------

struct TrainRunConfig {
  int batch_size = 12;
  int cycles_max = 6;
  int epochs_per_cycle = 2;
  bool early_stop = true;
  bool finetune_on_validation = false;
  double lr_max = 2e-4;
  double lr_min = 0.0;
  uint64_t seed = 0;
};

struct CycleMetrics {
  int cycle = 0;
  int64_t steps = 0;
  double train_l2 = 0.0;
  double train_kl = 0.0;
  double train_total = 0.0;
  std::array<double, loss::kNumVariables> train_l2_per_variable{};
  double val_score = 0.0;
};

struct Checkpoint {
  model::ModelConfig model_cfg;
  model::VUNetParams params;

  bool has_training = false;
  AdamState opt;
  ScheduleState sched;
  uint64_t rng_seed = 0;
  uint64_t rng_position = 0;
  double best_val_score = std::numeric_limits<double>::infinity();
  int cycles_completed = 0;
  bool finetuned = false;
  std::vector<CycleMetrics> history;
};

// Single-file container: JSON manifest + raw float64 blobs, CRC32 per blob.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Model-only checkpoint (no optimizer/schedule/rng sections).
void save_model_checkpoint(const model::ModelConfig& cfg, const model::VUNetParams& params,
                           const std::string& path);

// ---------------------------------------------------------------------------
// window sets and batches
// ---------------------------------------------------------------------------

struct WindowSet {
  struct Item {
    const data::RegionDataset* ds = nullptr;
    int day = 0;
    int start = 0;
  };
  std::vector<Item> items;
  data::FeatureSpec features;

  size_t size() const { return items.size(); }
  data::SampleWindow make(size_t i) const;

  // Assembles every window once and keeps it; trades memory for per-batch
  // assembly time in training loops.
  void materialize();
  const data::SampleWindow* cached(size_t i) const {
    return cache_.empty() ? nullptr : &cache_.at(i);
  }

  // all windows of the given datasets at the given stride
  static WindowSet from_datasets(const std::vector<const data::RegionDataset*>& datasets,
                                 int stride, const data::FeatureSpec& features);

private:
  std::vector<data::SampleWindow> cache_;
};

WindowSet concat(const WindowSet& a, const WindowSet& b);

struct Batch {
  Grid4D input;
  Grid4D target;
  Mask4D mask;
};

Batch assemble_batch(const WindowSet& set, const std::vector<size_t>& indices);

// ---------------------------------------------------------------------------
// structured training log (one JSON object per line)
// ---------------------------------------------------------------------------

class TrainLog {
public:
  TrainLog() = default;
  explicit TrainLog(std::ostream* out, std::ostream* csv = nullptr) : out_(out), csv_(csv) {}

  void step(int64_t step, int cycle, int epoch, double lr, const loss::LossBreakdown& bd);
  void cycle(const CycleMetrics& m);

private:
  void csv_header();

  std::ostream* out_ = nullptr;
  std::ostream* csv_ = nullptr;
  bool csv_header_done_ = false;
};

// ---------------------------------------------------------------------------
// trainer
// ---------------------------------------------------------------------------

class Trainer {
public:
  Trainer(const model::ModelConfig& model_cfg, const loss::LossConfig& loss_cfg,
          const TrainRunConfig& run_cfg);
  Trainer(const Checkpoint& ckpt, const loss::LossConfig& loss_cfg,
          const TrainRunConfig& run_cfg);

  // One cycle of epochs_per_cycle epochs over the training windows, then a
  // validation pass. Aborts with NumericError on a non-finite loss.
  CycleMetrics run_cycle(const WindowSet& train, const WindowSet& val, TrainLog* log = nullptr);

  // Runs cycles until cycles_max, or until a cycle fails to improve the best
  // validation score when early stopping is on. Returns the best checkpoint.
  Checkpoint fit(const WindowSet& train, const WindowSet& val, TrainLog* log = nullptr);

  // Exactly one more cycle on train+validation; the schedule restarts at
  // lr_max. Marks the checkpoint as finetuned.
  Checkpoint finetune_on_validation(const WindowSet& train, const WindowSet& val,
                                    TrainLog* log = nullptr);

  double validation_score(const WindowSet& val) const;

  Checkpoint snapshot() const;

  const model::VUNet& get_model() const { return model_; }
  model::VUNet& get_model() { return model_; }
  int64_t adam_steps() const { return opt_.step; }
  int cycles_completed() const { return cycles_completed_; }
  const std::vector<CycleMetrics>& history() const { return history_; }

private:
  model::VUNet model_;
  loss::LossConfig loss_cfg_;
  TrainRunConfig run_cfg_;
  AdamState opt_;
  ScheduleState sched_;
  RngStream rng_;
  double best_val_ = std::numeric_limits<double>::infinity();
  int cycles_completed_ = 0;
  bool finetuned_ = false;
  std::vector<CycleMetrics> history_;
};

}  // namespace vw4c::train
