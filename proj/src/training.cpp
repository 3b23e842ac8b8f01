#include "vw4c/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "json.hpp"
#include "vw4c/errors.hpp"
#include "vw4c/evaluation.hpp"

namespace vw4c::train {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

void AdamState::init(const model::VUNetParams& params) {
  m.clear();
  v.clear();
  step = 0;
  params.for_each([this](const std::string&, const ParamTensor& p) {
    m.emplace_back(p.value.size(), 0.0);
    v.emplace_back(p.value.size(), 0.0);
  });
}

void adam_step(model::VUNetParams& params, AdamState& state, double lr) {
  ++state.step;
  const double b1 = state.cfg.beta1;
  const double b2 = state.cfg.beta2;
  const double bc1 = 1.0 - std::pow(b1, double(state.step));
  const double bc2 = 1.0 - std::pow(b2, double(state.step));
  size_t idx = 0;
  params.for_each([&](const std::string& name, ParamTensor& p) {
    if (idx >= state.m.size()) throw ConfigError("adam_step: state not initialized");
    std::vector<double>& m = state.m[idx];
    std::vector<double>& v = state.v[idx];
    if (m.size() != p.value.size()) {
      throw ConfigError("adam_step: moment buffer mismatch for " + name);
    }
    for (size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p.value[i] -= lr * mhat / (std::sqrt(vhat) + state.cfg.eps);
    }
    ++idx;
  });
}

// ---------------------------------------------------------------------------
// schedule
// ---------------------------------------------------------------------------

double cyclic_cosine_lr(const ScheduleState& state) {
  const double frac = double(state.step_in_cycle) / double(state.steps_per_cycle);
  return state.lr_min + (state.lr_max - state.lr_min) / 2.0 * (1.0 + std::cos(M_PI * frac));
}

void schedule_advance(ScheduleState& state) {
  if (++state.step_in_cycle >= state.steps_per_cycle) {
    state.step_in_cycle = 0;
    ++state.cycle_index;
  }
}

// ---------------------------------------------------------------------------
// window sets
// ---------------------------------------------------------------------------

data::SampleWindow WindowSet::make(size_t i) const {
  if (!cache_.empty()) return cache_.at(i);
  const Item& item = items.at(i);
  return data::make_window(*item.ds, item.day, item.start, features);
}

void WindowSet::materialize() {
  if (!cache_.empty()) return;
  cache_.reserve(items.size());
  for (const Item& item : items) {
    cache_.push_back(data::make_window(*item.ds, item.day, item.start, features));
  }
}

WindowSet WindowSet::from_datasets(const std::vector<const data::RegionDataset*>& datasets,
                                   int stride, const data::FeatureSpec& features) {
  WindowSet set;
  set.features = features;
  for (const data::RegionDataset* ds : datasets) {
    for (const data::WindowKey& key : data::window_split(*ds, stride)) {
      set.items.push_back({ds, key.day, key.start});
    }
  }
  return set;
}

WindowSet concat(const WindowSet& a, const WindowSet& b) {
  WindowSet out = a;
  out.items.insert(out.items.end(), b.items.begin(), b.items.end());
  return out;
}

Batch assemble_batch(const WindowSet& set, const std::vector<size_t>& indices) {
  if (indices.empty()) throw ConfigError("assemble_batch: empty index list");
  Batch batch;
  for (size_t k = 0; k < indices.size(); ++k) {
    const data::SampleWindow* cached = set.cached(indices[k]);
    data::SampleWindow fresh;
    if (!cached) {
      fresh = set.make(indices[k]);
      cached = &fresh;
    }
    const data::SampleWindow& w = *cached;
    const Shape4& si = w.input.shape();
    const Shape4& st = w.target.shape();
    if (k == 0) {
      batch.input = Grid4D(int(indices.size()), si.c, si.h, si.w);
      batch.target = Grid4D(int(indices.size()), st.c, st.h, st.w);
      batch.mask = Mask4D(int(indices.size()), st.c, st.h, st.w);
    }
    std::copy(w.input.data(), w.input.data() + si.count(),
              batch.input.data() + size_t(k) * si.count());
    std::copy(w.target.data(), w.target.data() + st.count(),
              batch.target.data() + size_t(k) * st.count());
    std::copy(w.target_mask.data(), w.target_mask.data() + st.count(),
              batch.mask.data() + size_t(k) * st.count());
  }
  return batch;
}

// ---------------------------------------------------------------------------
// log
// ---------------------------------------------------------------------------

void TrainLog::csv_header() {
  if (!csv_ || csv_header_done_) return;
  *csv_ << "step,cycle,epoch,lr,l2,kl,total,val_score\n";
  csv_header_done_ = true;
}

void TrainLog::step(int64_t step, int cycle, int epoch, double lr,
                    const loss::LossBreakdown& bd) {
  if (out_) {
    json line = {
        {"type", "step"},       {"step", step},
        {"cycle", cycle},       {"epoch", epoch},
        {"lr", lr},             {"l2", bd.l2_total},
        {"kl", bd.kl},          {"total", bd.total},
    };
    for (int v = 0; v < loss::kNumVariables; ++v) {
      line["l2_" + std::string(loss::variable_name(loss::TargetVariable(v)))] =
          bd.l2_per_variable[size_t(v)];
    }
    *out_ << line.dump() << "\n";
  }
  if (csv_) {
    csv_header();
    *csv_ << step << "," << cycle << "," << epoch << "," << lr << "," << bd.l2_total << ","
          << bd.kl << "," << bd.total << ",\n";
  }
}

void TrainLog::cycle(const CycleMetrics& m) {
  if (out_) {
    json line = {
        {"type", "cycle"},          {"cycle", m.cycle},
        {"steps", m.steps},         {"train_l2", m.train_l2},
        {"train_kl", m.train_kl},   {"train_total", m.train_total},
        {"val_score", m.val_score},
    };
    *out_ << line.dump() << "\n";
  }
  if (csv_) {
    csv_header();
    *csv_ << "," << m.cycle << ",,," << m.train_l2 << "," << m.train_kl << ","
          << m.train_total << "," << m.val_score << "\n";
  }
}

// ---------------------------------------------------------------------------
// trainer
// ---------------------------------------------------------------------------

Trainer::Trainer(const model::ModelConfig& model_cfg, const loss::LossConfig& loss_cfg,
                 const TrainRunConfig& run_cfg)
    : model_(model_cfg, run_cfg.seed), loss_cfg_(loss_cfg), run_cfg_(run_cfg),
      rng_(run_cfg.seed + 0x5EED) {
  if (run_cfg.batch_size < 1) throw ConfigError("TrainRunConfig: batch_size must be >= 1");
  if (run_cfg.epochs_per_cycle < 1) {
    throw ConfigError("TrainRunConfig: epochs_per_cycle must be >= 1");
  }
  opt_.init(model_.params());
  sched_.lr_max = run_cfg.lr_max;
  sched_.lr_min = run_cfg.lr_min;
}

Trainer::Trainer(const Checkpoint& ckpt, const loss::LossConfig& loss_cfg,
                 const TrainRunConfig& run_cfg)
    : model_(ckpt.model_cfg, ckpt.params), loss_cfg_(loss_cfg), run_cfg_(run_cfg),
      rng_(RngStream::restore(ckpt.rng_seed, ckpt.rng_position)) {
  if (!ckpt.has_training) {
    throw ConfigError("Trainer: checkpoint has no training state to resume from");
  }
  opt_ = ckpt.opt;
  sched_ = ckpt.sched;
  best_val_ = ckpt.best_val_score;
  cycles_completed_ = ckpt.cycles_completed;
  finetuned_ = ckpt.finetuned;
  history_ = ckpt.history;
}

Checkpoint Trainer::snapshot() const {
  Checkpoint ckpt;
  ckpt.model_cfg = model_.config();
  ckpt.params = model_.params();
  ckpt.has_training = true;
  ckpt.opt = opt_;
  ckpt.sched = sched_;
  ckpt.rng_seed = rng_.seed();
  ckpt.rng_position = rng_.position();
  ckpt.best_val_score = best_val_;
  ckpt.cycles_completed = cycles_completed_;
  ckpt.finetuned = finetuned_;
  ckpt.history = history_;
  return ckpt;
}

double Trainer::validation_score(const WindowSet& val) const {
  if (val.size() == 0) throw ConfigError("validation_score: empty validation set");
  eval::ScoreAccumulator acc(loss_cfg_.weights);
  RngStream rng(0);  // mean-mode inference draws nothing
  const size_t batch = size_t(run_cfg_.batch_size);
  for (size_t at = 0; at < val.size(); at += batch) {
    std::vector<size_t> idx;
    for (size_t i = at; i < std::min(at + batch, val.size()); ++i) idx.push_back(i);
    Batch b = assemble_batch(val, idx);
    Grid4D y = model_.forward(b.input, model::LatentMode::mean, rng, false);
    acc.add(y, b.target, b.mask);
  }
  return acc.report().aggregate;
}

CycleMetrics Trainer::run_cycle(const WindowSet& train, const WindowSet& val, TrainLog* log) {
  const size_t n = train.size();
  if (n == 0) throw ConfigError("run_cycle: empty training set");
  const size_t batch = size_t(run_cfg_.batch_size);
  const int64_t steps_per_epoch = int64_t((n + batch - 1) / batch);
  sched_.steps_per_cycle = int64_t(run_cfg_.epochs_per_cycle) * steps_per_epoch;
  sched_.step_in_cycle = 0;

  CycleMetrics metrics;
  metrics.cycle = cycles_completed_;

  for (int epoch = 0; epoch < run_cfg_.epochs_per_cycle; ++epoch) {
    // deterministic reshuffle per epoch
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    for (size_t i = n; i > 1; --i) {
      const size_t j = size_t(rng_.uniform_int(i));
      std::swap(order[i - 1], order[j]);
    }

    for (size_t at = 0; at < n; at += batch) {
      std::vector<size_t> idx(order.begin() + at,
                              order.begin() + std::min(at + batch, n));
      Batch b = assemble_batch(train, idx);

      const double lr = cyclic_cosine_lr(sched_);
      sched_.current_lr = lr;

      model_.params().zero_grads();
      model::ForwardTrace trace;
      Grid4D y = model_.forward(b.input, model::LatentMode::sample, rng_, true, nullptr, &trace);

      Grid4D grad_y;
      std::vector<double> grad_mu, grad_sigma;
      loss::LossBreakdown bd = loss::compute_loss(y, b.target, b.mask, trace.latent, loss_cfg_,
                                                  &grad_y, &grad_mu, &grad_sigma);
      if (!std::isfinite(bd.total)) {
        throw NumericError("non-finite loss at cycle " + std::to_string(cycles_completed_) +
                           " epoch " + std::to_string(epoch) + " batch " +
                           std::to_string(at / batch));
      }
      model_.backward(trace, grad_y, grad_mu, grad_sigma);
      adam_step(model_.params(), opt_, lr);
      schedule_advance(sched_);

      if (log) log->step(opt_.step, cycles_completed_, epoch, lr, bd);
      metrics.train_l2 += bd.l2_total;
      metrics.train_kl += bd.kl;
      metrics.train_total += bd.total;
      for (int v = 0; v < loss::kNumVariables; ++v) {
        metrics.train_l2_per_variable[size_t(v)] += bd.l2_per_variable[size_t(v)];
      }
      ++metrics.steps;
    }
  }

  metrics.train_l2 /= double(metrics.steps);
  metrics.train_kl /= double(metrics.steps);
  metrics.train_total /= double(metrics.steps);
  for (auto& x : metrics.train_l2_per_variable) x /= double(metrics.steps);
  metrics.val_score = validation_score(val);

  ++cycles_completed_;
  history_.push_back(metrics);
  if (log) log->cycle(metrics);
  return metrics;
}

Checkpoint Trainer::fit(const WindowSet& train, const WindowSet& val, TrainLog* log) {
  Checkpoint best = snapshot();
  while (cycles_completed_ < run_cfg_.cycles_max) {
    CycleMetrics m = run_cycle(train, val, log);
    if (m.val_score < best_val_) {
      best_val_ = m.val_score;
      best = snapshot();
    } else if (run_cfg_.early_stop) {
      break;
    }
  }
  return best;
}

Checkpoint Trainer::finetune_on_validation(const WindowSet& train, const WindowSet& val,
                                           TrainLog* log) {
  WindowSet combined = concat(train, val);
  // warm restart on the combined data
  sched_.step_in_cycle = 0;
  run_cycle(combined, val, log);
  finetuned_ = true;
  return snapshot();
}

}  // namespace vw4c::train
