#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"
#include "run_config.hpp"
#include "vw4c/blob.hpp"
#include "vw4c/dataset.hpp"
#include "vw4c/errors.hpp"
#include "vw4c/evaluation.hpp"
#include "vw4c/gradsuite.hpp"
#include "vw4c/model.hpp"
#include "vw4c/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vw4c;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

void apply_thread_cap() {
#ifdef _OPENMP
  if (const char* env = std::getenv("VW4C_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(std::min(n, omp_get_num_procs()));
  }
#endif
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  f << text;
}

std::vector<data::RegionDataset> load_datasets(const std::vector<std::string>& paths) {
  std::vector<data::RegionDataset> out;
  out.reserve(paths.size());
  for (const std::string& p : paths) out.push_back(data::read_dataset(p));
  return out;
}

void check_model_vs_data(const model::ModelConfig& model_cfg, const data::FeatureSpec& features,
                         const data::RegionDataset& ds) {
  if (features.input_channels() != model_cfg.in_channels) {
    throw ConfigError("feature spec yields " + std::to_string(features.input_channels()) +
                      " input channels but the model expects " +
                      std::to_string(model_cfg.in_channels));
  }
  if (ds.height != model_cfg.input_size || ds.width != model_cfg.input_size) {
    throw ConfigError("dataset " + ds.region_id + " grid " + std::to_string(ds.height) + "x" +
                      std::to_string(ds.width) + " does not match model input_size " +
                      std::to_string(model_cfg.input_size));
  }
}

// last val_days days of each region are held out for validation
void split_days(const data::RegionDataset& ds, int val_days, std::vector<int>& train_days,
                std::vector<int>& val_days_out) {
  const int days = int(ds.days.size());
  if (days < 2) throw ConfigError("dataset " + ds.region_id + " needs at least 2 days to split");
  const int v = std::clamp(val_days, 1, days - 1);
  for (int d = 0; d < days - v; ++d) train_days.push_back(d);
  for (int d = days - v; d < days; ++d) val_days_out.push_back(d);
}

train::WindowSet windows_for_days(const data::RegionDataset& ds, const std::vector<int>& days,
                                  int stride, const data::FeatureSpec& features) {
  train::WindowSet set;
  set.features = features;
  for (const data::WindowKey& key : data::window_split(ds, stride)) {
    if (std::find(days.begin(), days.end(), key.day) != days.end()) {
      set.items.push_back({&ds, key.day, key.start});
    }
  }
  return set;
}

void write_pgm(const std::string& path, const double* values, int h, int w) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  f << "P5\n" << w << " " << h << "\n255\n";
  for (int i = 0; i < h * w; ++i) {
    const double clamped = std::clamp(values[i], 0.0, 1.0);
    const uint8_t byte = uint8_t(std::lround(clamped * 255.0));
    f.write(reinterpret_cast<const char*>(&byte), 1);
  }
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  int regions = 3;
  int days = 5;
  int size = 32;
  int frames = 96;
  double missing = 0.05;
  uint64_t seed = 1;
};

int cmd_synth(const SynthArgs& args) {
  fs::create_directories(args.out);
  RngStream master(args.seed);
  json summary = json::array();
  for (int r = 0; r < args.regions; ++r) {
    data::SynthConfig cfg;
    cfg.region_id = "R" + std::to_string(r + 1);
    cfg.size = args.size;
    cfg.days = args.days;
    cfg.frames_per_day = args.frames;
    cfg.missing_rate = args.missing;
    const uint64_t region_seed = master.next_u64();
    data::RegionDataset ds = data::synth_generate(cfg, region_seed);
    const std::string dir = args.out + "/" + cfg.region_id;
    data::write_dataset(ds, dir);
    const size_t windows = data::window_split(ds, 1).size();
    summary.push_back({{"region", cfg.region_id},
                       {"path", dir},
                       {"days", cfg.days},
                       {"frames_per_day", cfg.frames_per_day},
                       {"size", cfg.size},
                       {"windows", windows}});
    std::cout << cfg.region_id << ": " << cfg.days << " days x " << cfg.frames_per_day
              << " frames, " << cfg.size << "x" << cfg.size << ", " << windows
              << " windows -> " << dir << "\n";
  }
  const json snapshot = {{"command", "synth"},
                         {"regions", args.regions},
                         {"days", args.days},
                         {"size", args.size},
                         {"frames", args.frames},
                         {"missing", args.missing},
                         {"seed", args.seed},
                         {"generated", summary}};
  write_text_file(args.out + "/synth_config.json", snapshot.dump(2) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
  std::vector<std::string> data;
  std::string config;
  std::string out;
  bool finetune_on_val = false;
  std::optional<uint64_t> seed;
  std::optional<int> stride;
  std::optional<int> val_days;
  std::optional<int> cycles_max;
  std::optional<int> batch_size;
  std::optional<double> lr_max;
  std::optional<bool> early_stop;
};

int cmd_train(const TrainArgs& args) {
  cli::RunConfig cfg = args.config.empty() ? cli::RunConfig{} : cli::load_run_config(args.config);
  if (args.seed) cfg.train.seed = *args.seed;
  if (args.stride) cfg.window_stride = *args.stride;
  if (args.val_days) cfg.val_days = *args.val_days;
  if (args.cycles_max) cfg.train.cycles_max = *args.cycles_max;
  if (args.batch_size) cfg.train.batch_size = *args.batch_size;
  if (args.lr_max) cfg.train.lr_max = *args.lr_max;
  if (args.early_stop) cfg.train.early_stop = *args.early_stop;
  if (args.finetune_on_val) cfg.train.finetune_on_validation = true;
  cfg.model.validate();
  cfg.features.validate();

  std::vector<data::RegionDataset> datasets = load_datasets(args.data);
  if (datasets.empty()) throw ConfigError("train: at least one --data path is required");

  train::WindowSet train_set, val_set;
  train_set.features = cfg.features;
  val_set.features = cfg.features;
  for (const data::RegionDataset& ds : datasets) {
    check_model_vs_data(cfg.model, cfg.features, ds);
    std::vector<int> train_days, val_days;
    split_days(ds, cfg.val_days, train_days, val_days);
    train_set = train::concat(train_set, windows_for_days(ds, train_days, cfg.window_stride,
                                                          cfg.features));
    val_set = train::concat(val_set, windows_for_days(ds, val_days, cfg.window_stride,
                                                      cfg.features));
  }
  if (train_set.size() == 0) throw ConfigError("train: no training windows after the split");
  if (val_set.size() == 0) throw ConfigError("train: no validation windows after the split");

  fs::create_directories(args.out);
  json snapshot = cfg.to_json();
  snapshot["command"] = "train";
  snapshot["data"] = args.data;
  write_text_file(args.out + "/run_config.json", snapshot.dump(2) + "\n");

  std::ofstream log_file(args.out + "/train_log.jsonl", std::ios::trunc);
  std::ofstream csv_file(args.out + "/loss_history.csv", std::ios::trunc);
  train::TrainLog log(&log_file, &csv_file);

  std::cout << "training on " << train_set.size() << " windows, validating on "
            << val_set.size() << " windows\n";
  train::Trainer trainer(cfg.model, cfg.loss, cfg.train);
  train::Checkpoint best = trainer.fit(train_set, val_set, &log);
  std::cout << "fit done after " << trainer.cycles_completed() << " cycles, best val score "
            << best.best_val_score << "\n";
  train::save_checkpoint(best, args.out + "/best.ckpt");

  if (cfg.train.finetune_on_validation) {
    train::Trainer continued(best, cfg.loss, cfg.train);
    train::Checkpoint final_ckpt = continued.finetune_on_validation(train_set, val_set, &log);
    train::save_checkpoint(final_ckpt, args.out + "/final.ckpt");
    std::cout << "finetuned on train+validation for one extra cycle\n";
  } else {
    train::save_checkpoint(trainer.snapshot(), args.out + "/final.ckpt");
  }
  std::cout << "wrote " << args.out << "/best.ckpt, final.ckpt, train_log.jsonl, "
            << "loss_history.csv\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string ckpt;
  std::string data;
  std::string out;
  std::string config;
  std::string mode = "mean";
  int ensemble = 0;
  int stride = 1;
  int images = 0;
  int batch = 12;
};

int cmd_predict(const PredictArgs& args) {
  if (args.mode != "mean" && args.mode != "sample") {
    throw ConfigError("predict: --mode must be 'mean' or 'sample'");
  }
  train::Checkpoint ckpt = train::load_checkpoint(args.ckpt);
  cli::RunConfig cfg = args.config.empty() ? cli::RunConfig{} : cli::load_run_config(args.config);
  data::RegionDataset ds = data::read_dataset(args.data);
  check_model_vs_data(ckpt.model_cfg, cfg.features, ds);

  model::VUNet net(ckpt.model_cfg, ckpt.params);
  const std::vector<data::WindowKey> keys = data::window_split(ds, args.stride);
  if (keys.empty()) throw ConfigError("predict: dataset has no complete windows");

  fs::create_directories(args.out);
  const int h = ds.height, w = ds.width;
  const int channels = data::kLeadTimes * 4;
  const size_t frame_count = size_t(channels) * h * w;

  const int n_members = std::max(0, args.ensemble);
  std::vector<std::vector<float>> members;
  members.resize(size_t(n_members));
  for (auto& m : members) m.resize(keys.size() * frame_count);
  std::vector<float> main_out(keys.size() * frame_count);
  std::vector<float> std_out(n_members > 0 ? keys.size() * frame_count : 0);

  RngStream rng(ckpt.rng_seed == 0 ? 42 : ckpt.rng_seed);
  for (size_t at = 0; at < keys.size(); at += size_t(args.batch)) {
    const size_t end = std::min(at + size_t(args.batch), keys.size());
    train::WindowSet chunk;
    chunk.features = cfg.features;
    for (size_t i = at; i < end; ++i) chunk.items.push_back({&ds, keys[i].day, keys[i].start});
    std::vector<size_t> idx(end - at);
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    train::Batch batch = train::assemble_batch(chunk, idx);

    if (n_members > 0) {
      model::EnsembleResult ens = net.predict_ensemble(batch.input, n_members, rng);
      for (size_t i = at; i < end; ++i) {
        const size_t off = (i - at) * frame_count;
        for (int m = 0; m < n_members; ++m) {
          for (size_t k = 0; k < frame_count; ++k) {
            members[size_t(m)][i * frame_count + k] = float(ens.members[size_t(m)].data()[off + k]);
          }
        }
        for (size_t k = 0; k < frame_count; ++k) {
          main_out[i * frame_count + k] = float(ens.mean.data()[off + k]);
          std_out[i * frame_count + k] = float(ens.std.data()[off + k]);
        }
      }
    } else {
      const model::LatentMode mode =
          args.mode == "mean" ? model::LatentMode::mean : model::LatentMode::sample;
      Grid4D y = net.forward(batch.input, mode, rng, false);
      for (size_t i = at; i < end; ++i) {
        const size_t off = (i - at) * frame_count;
        for (size_t k = 0; k < frame_count; ++k) {
          main_out[i * frame_count + k] = float(y.data()[off + k]);
        }
      }
    }
  }

  const std::vector<uint64_t> extents = {uint64_t(keys.size()), uint64_t(channels), uint64_t(h),
                                         uint64_t(w)};
  io::write_f32_blob(args.out + "/predictions.vw4c", extents, main_out.data());
  if (n_members > 0) {
    io::write_f32_blob(args.out + "/std.vw4c", extents, std_out.data());
    for (int m = 0; m < n_members; ++m) {
      char name[32];
      std::snprintf(name, sizeof(name), "/member_%02d.vw4c", m);
      io::write_f32_blob(args.out + name, extents, members[size_t(m)].data());
    }
  }

  json windows = json::array();
  for (const data::WindowKey& k : keys) windows.push_back({k.day, k.start});
  json manifest = {{"format", "vw4c-predictions"},
                   {"version", 1},
                   {"checkpoint", args.ckpt},
                   {"dataset", args.data},
                   {"region_id", ds.region_id},
                   {"stride", args.stride},
                   {"mode", args.mode},
                   {"ensemble", n_members},
                   {"windows", windows}};
  manifest["features"] = cfg.to_json()["features"];
  write_text_file(args.out + "/predictions.json", manifest.dump(2) + "\n");

  if (args.images > 0) {
    fs::create_directories(args.out + "/images");
    const int n_dump = std::min<int>(args.images, int(keys.size()));
    for (int i = 0; i < n_dump; ++i) {
      for (int v = 0; v < 4; ++v) {
        for (int t = 0; t < data::kLeadTimes; ++t) {
          const int c = t * 4 + v;
          char name[96];
          std::snprintf(name, sizeof(name), "/images/w%03d_%s_t%02d.pgm", i,
                        data::target_variables()[size_t(v)].c_str(), t);
          std::vector<double> plane(size_t(h) * w);
          for (int k = 0; k < h * w; ++k) {
            plane[size_t(k)] = double(main_out[size_t(i) * frame_count + size_t(c) * h * w + k]);
          }
          write_pgm(args.out + name, plane.data(), h, w);
        }
      }
    }
    std::cout << "dumped PGM images for " << n_dump << " windows\n";
  }
  std::cout << "wrote predictions for " << keys.size() << " windows to " << args.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string pred;
  std::vector<std::string> data;
  std::vector<std::string> train_data;
  bool baselines = false;
  std::string csv_out;
};

int cmd_evaluate(const EvaluateArgs& args) {
  std::ifstream mf(args.pred + "/predictions.json");
  if (!mf) throw IoError("cannot open predictions manifest: " + args.pred + "/predictions.json");
  json manifest;
  try {
    mf >> manifest;
  } catch (const json::exception& e) {
    throw IoError("malformed predictions manifest: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != "vw4c-predictions") {
    throw IoError("not a predictions manifest: " + args.pred);
  }

  std::vector<data::RegionDataset> datasets = load_datasets(args.data);
  const std::string region = manifest.at("region_id").get<std::string>();
  const data::RegionDataset* ds = nullptr;
  for (const auto& d : datasets) {
    if (d.region_id == region) ds = &d;
  }
  if (!ds) throw ConfigError("evaluate: no --data path provides region " + region);

  cli::RunConfig feature_holder;
  {
    json wrapped;
    wrapped["features"] = manifest.at("features");
    feature_holder = cli::run_config_from_json(wrapped);
  }
  const data::FeatureSpec& features = feature_holder.features;

  std::vector<uint64_t> extents;
  std::vector<float> preds = io::read_f32_blob(args.pred + "/predictions.vw4c", &extents);
  const auto& windows = manifest.at("windows");
  if (extents.size() != 4 || extents[0] != windows.size()) {
    throw IoError("predictions blob shape does not match the manifest window list");
  }
  const int channels = int(extents[1]);
  const int h = int(extents[2]), w = int(extents[3]);
  const size_t frame_count = size_t(channels) * h * w;

  eval::ScoreAccumulator model_acc;
  eval::ScoreAccumulator persistence_acc;
  for (size_t i = 0; i < windows.size(); ++i) {
    const int day = windows[i][0].get<int>();
    const int start = windows[i][1].get<int>();
    data::SampleWindow win = data::make_window(*ds, day, start, features);
    Grid4D pred(1, channels, h, w);
    for (size_t k = 0; k < frame_count; ++k) {
      pred.data()[k] = double(preds[i * frame_count + k]);
    }
    model_acc.add(pred, win.target, win.target_mask);
    if (args.baselines) {
      persistence_acc.add(eval::persistence_baseline(win, features), win.target,
                          win.target_mask);
    }
  }

  std::vector<eval::NamedReport> rows;
  rows.push_back({"model", std::nullopt, model_acc.report()});

  if (args.baselines) {
    std::vector<data::RegionDataset> train_datasets;
    const data::RegionDataset* mean_source = ds;
    if (!args.train_data.empty()) {
      train_datasets = load_datasets(args.train_data);
      mean_source = nullptr;
      for (const auto& d : train_datasets) {
        if (d.region_id == region) mean_source = &d;
      }
      if (!mean_source) {
        throw ConfigError("evaluate: --train-data does not provide region " + region);
      }
    }
    std::vector<int> all_days(mean_source->days.size());
    for (size_t d = 0; d < all_days.size(); ++d) all_days[d] = int(d);
    eval::MeanBaseline mb = eval::MeanBaseline::fit({{mean_source, all_days}});

    eval::ScoreAccumulator mean_acc;
    for (size_t i = 0; i < windows.size(); ++i) {
      const int day = windows[i][0].get<int>();
      const int start = windows[i][1].get<int>();
      data::SampleWindow win = data::make_window(*ds, day, start, features);
      mean_acc.add(mb.predict(region), win.target, win.target_mask);
    }
    rows.push_back({"mean-baseline", std::nullopt, mean_acc.report()});
    rows.push_back({"persistence-baseline", std::nullopt, persistence_acc.report()});
  }

  std::cout << eval::render_report(rows, eval::ReportFormat::text);
  if (!args.csv_out.empty()) {
    write_text_file(args.csv_out, eval::render_report(rows, eval::ReportFormat::csv));
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// gradcheck / lr-schedule
// ---------------------------------------------------------------------------

int cmd_gradcheck() {
  bool all_pass = true;
  for (const nn::SuiteCheck& check : nn::run_gradient_suite()) {
    std::cout << (check.pass ? "[PASS] " : "[FAIL] ") << check.name << ": max rel error "
              << check.max_rel_error << " (tolerance " << check.tolerance << ")\n";
    all_pass = all_pass && check.pass;
  }
  return all_pass ? kExitOk : kExitCheckFailure;
}

struct LrScheduleArgs {
  int64_t steps_per_cycle = 100;
  int cycles = 1;
  double lr_max = 2e-4;
  double lr_min = 0.0;
};

int cmd_lr_schedule(const LrScheduleArgs& args) {
  if (args.steps_per_cycle < 1) throw ConfigError("lr-schedule: --steps-per-cycle must be >= 1");
  train::ScheduleState st;
  st.steps_per_cycle = args.steps_per_cycle;
  st.lr_max = args.lr_max;
  st.lr_min = args.lr_min;
  std::cout << "step,cycle,step_in_cycle,lr\n";
  int64_t step = 0;
  std::cout.precision(12);
  for (int c = 0; c < args.cycles; ++c) {
    for (int64_t s = 0; s < args.steps_per_cycle; ++s) {
      std::cout << step << "," << st.cycle_index << "," << st.step_in_cycle << ","
                << train::cyclic_cosine_lr(st) << "\n";
      train::schedule_advance(st);
      ++step;
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_cap();

  CLI::App app{"variational U-Net nowcasting pipeline"};
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate synthetic region datasets");
  synth_cmd->add_option("--out", synth.out, "output directory")->required();
  synth_cmd->add_option("--regions", synth.regions, "number of regions");
  synth_cmd->add_option("--days", synth.days, "days per region");
  synth_cmd->add_option("--size", synth.size, "grid size in pixels");
  synth_cmd->add_option("--frames", synth.frames, "frames per day");
  synth_cmd->add_option("--missing", synth.missing, "missing-data rate");
  synth_cmd->add_option("--seed", synth.seed, "master seed");

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "train one model on the given regions");
  train_cmd->add_option("--data", train_args.data, "region dataset directories")->required();
  train_cmd->add_option("--config", train_args.config, "JSON run config");
  train_cmd->add_option("--out", train_args.out, "output directory")->required();
  train_cmd->add_flag("--finetune-on-val", train_args.finetune_on_val,
                      "one extra cycle on train+validation");
  train_cmd->add_option("--seed", train_args.seed, "override train.seed");
  train_cmd->add_option("--stride", train_args.stride, "override window_stride");
  train_cmd->add_option("--val-days", train_args.val_days, "override val_days");
  train_cmd->add_option("--cycles-max", train_args.cycles_max, "override train.cycles_max");
  train_cmd->add_option("--batch-size", train_args.batch_size, "override train.batch_size");
  train_cmd->add_option("--lr-max", train_args.lr_max, "override train.lr_max");
  train_cmd->add_option("--early-stop", train_args.early_stop, "override train.early_stop");

  PredictArgs predict;
  CLI::App* predict_cmd = app.add_subcommand("predict", "run inference over a dataset");
  predict_cmd->add_option("--ckpt", predict.ckpt, "checkpoint file")->required();
  predict_cmd->add_option("--data", predict.data, "region dataset directory")->required();
  predict_cmd->add_option("--out", predict.out, "output directory")->required();
  predict_cmd->add_option("--config", predict.config, "JSON run config (for features)");
  predict_cmd->add_option("--mode", predict.mode, "latent mode: mean or sample");
  predict_cmd->add_option("--ensemble", predict.ensemble, "sampled ensemble members");
  predict_cmd->add_option("--stride", predict.stride, "window stride");
  predict_cmd->add_option("--images", predict.images, "dump PGM images for first N windows");
  predict_cmd->add_option("--batch", predict.batch, "inference batch size");

  EvaluateArgs evaluate;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "score predictions against a dataset");
  eval_cmd->add_option("--pred", evaluate.pred, "predictions directory")->required();
  eval_cmd->add_option("--data", evaluate.data, "region dataset directories")->required();
  eval_cmd->add_option("--train-data", evaluate.train_data,
                       "training datasets for the mean baseline");
  eval_cmd->add_flag("--baselines", evaluate.baselines, "add mean and persistence baselines");
  eval_cmd->add_option("--csv", evaluate.csv_out, "also write a CSV report");

  CLI::App* grad_cmd = app.add_subcommand("gradcheck", "run the finite-difference suite");

  LrScheduleArgs lr;
  CLI::App* lr_cmd = app.add_subcommand("lr-schedule", "print the cosine schedule table");
  lr_cmd->add_option("--steps-per-cycle", lr.steps_per_cycle, "steps per cycle")->required();
  lr_cmd->add_option("--cycles", lr.cycles, "cycles to print");
  lr_cmd->add_option("--lr-max", lr.lr_max, "maximum learning rate");
  lr_cmd->add_option("--lr-min", lr.lr_min, "minimum learning rate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (synth_cmd->parsed()) return cmd_synth(synth);
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (predict_cmd->parsed()) return cmd_predict(predict);
    if (eval_cmd->parsed()) return cmd_evaluate(evaluate);
    if (grad_cmd->parsed()) return cmd_gradcheck();
    if (lr_cmd->parsed()) return cmd_lr_schedule(lr);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitConfig;
}
