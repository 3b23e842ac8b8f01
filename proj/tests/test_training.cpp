#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "test_util.hpp"
#include "vw4c/errors.hpp"
#include "vw4c/training.hpp"

using namespace vw4c;
using namespace vw4c::train;

namespace {

namespace fs = std::filesystem;

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / ("vw4c_train_" + name)).string();
}

model::ModelConfig tiny_model() {
  model::ModelConfig cfg;
  cfg.in_channels = 35;
  cfg.out_channels = 128;
  cfg.levels = 2;
  cfg.base_width = 4;
  cfg.latent_dim = 8;
  cfg.dropout_rate = 0.0;
  cfg.groups = 4;
  cfg.input_size = 8;
  return cfg;
}

data::RegionDataset tiny_dataset(uint64_t seed, int days = 1, int frames = 64) {
  data::SynthConfig cfg;
  cfg.size = 8;
  cfg.days = days;
  cfg.frames_per_day = frames;
  cfg.missing_rate = 0.05;
  return data::synth_generate(cfg, seed);
}

WindowSet window_set(const data::RegionDataset& ds, size_t limit, int stride = 1) {
  WindowSet set = WindowSet::from_datasets({&ds}, stride, data::FeatureSpec{});
  if (set.items.size() > limit) set.items.resize(limit);
  return set;
}

}  // namespace

TEST_SUITE("adam") {
  TEST_CASE("zero gradients leave parameters unchanged") {
    model::ModelConfig cfg = tiny_model();
    model::VUNet net(cfg, 1);
    AdamState st;
    st.init(net.params());
    std::vector<double> before;
    net.params().for_each([&](const std::string&, ParamTensor& p) {
      before.insert(before.end(), p.value.begin(), p.value.end());
    });
    net.params().zero_grads();
    adam_step(net.params(), st, 1e-3);
    adam_step(net.params(), st, 1e-3);
    std::vector<double> after;
    net.params().for_each([&](const std::string&, ParamTensor& p) {
      after.insert(after.end(), p.value.begin(), p.value.end());
    });
    CHECK(before == after);
  }

  TEST_CASE("first step is approximately -lr * sign(g)") {
    model::ModelConfig cfg = tiny_model();
    model::VUNet net(cfg, 2);
    AdamState st;
    st.init(net.params());
    net.params().zero_grads();
    const double v0 = net.params().head.b.value[0];
    net.params().head.b.grad[0] = 0.37;
    adam_step(net.params(), st, 1e-3);
    const double update = net.params().head.b.value[0] - v0;
    CHECK(update == doctest::Approx(-1e-3).epsilon(1e-6));
  }

  TEST_CASE("two steps match a scalar oracle to 1e-12") {
    model::ModelConfig cfg = tiny_model();
    model::VUNet net(cfg, 3);
    AdamState st;
    st.init(net.params());
    const double g1 = 0.8, g2 = -0.3, lr = 2e-3;
    const double theta0 = net.params().head.b.value[0];

    net.params().zero_grads();
    net.params().head.b.grad[0] = g1;
    adam_step(net.params(), st, lr);
    net.params().zero_grads();
    net.params().head.b.grad[0] = g2;
    adam_step(net.params(), st, lr);

    // hand-rolled scalar Adam
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    double m = 0, v = 0, theta = theta0;
    for (int t = 1; t <= 2; ++t) {
      const double g = t == 1 ? g1 : g2;
      m = b1 * m + (1 - b1) * g;
      v = b2 * v + (1 - b2) * g * g;
      const double mhat = m / (1 - std::pow(b1, t));
      const double vhat = v / (1 - std::pow(b2, t));
      theta -= lr * mhat / (std::sqrt(vhat) + eps);
    }
    CHECK(net.params().head.b.value[0] == doctest::Approx(theta).epsilon(1e-12));
  }
}

TEST_SUITE("schedule") {
  TEST_CASE("cycle start is lr_max, midpoint is half") {
    ScheduleState st;
    st.steps_per_cycle = 100;
    st.step_in_cycle = 0;
    CHECK(cyclic_cosine_lr(st) == doctest::Approx(2e-4).epsilon(1e-15));
    st.step_in_cycle = 50;
    CHECK(cyclic_cosine_lr(st) == doctest::Approx(1e-4).epsilon(1e-12));
  }

  TEST_CASE("restart at each new cycle") {
    ScheduleState st;
    st.steps_per_cycle = 10;
    for (int i = 0; i < 10; ++i) schedule_advance(st);
    CHECK(st.cycle_index == 1);
    CHECK(st.step_in_cycle == 0);
    CHECK(cyclic_cosine_lr(st) == doctest::Approx(2e-4).epsilon(1e-15));
  }

  TEST_CASE("periodicity and bounds") {
    ScheduleState st;
    st.steps_per_cycle = 37;
    std::vector<double> first_cycle;
    for (int i = 0; i < 37; ++i) {
      first_cycle.push_back(cyclic_cosine_lr(st));
      schedule_advance(st);
    }
    for (int i = 0; i < 37; ++i) {
      const double lr = cyclic_cosine_lr(st);
      CHECK(lr == first_cycle[size_t(i)]);
      CHECK(lr <= st.lr_max);
      CHECK(lr >= st.lr_min);
      schedule_advance(st);
    }
  }

  TEST_CASE("non-increasing within a cycle") {
    ScheduleState st;
    st.steps_per_cycle = 64;
    double prev = 1e9;
    for (int i = 0; i < 64; ++i) {
      const double lr = cyclic_cosine_lr(st);
      CHECK(lr <= prev);
      prev = lr;
      schedule_advance(st);
    }
  }
}

TEST_SUITE("train_cycle") {
  TEST_CASE("24 samples, batch 12, 2 epochs give exactly 4 steps") {
    data::RegionDataset ds = tiny_dataset(100);
    WindowSet train = window_set(ds, 24);
    REQUIRE(train.size() == 24);
    WindowSet val = window_set(ds, 4);

    TrainRunConfig rc;
    rc.batch_size = 12;
    rc.epochs_per_cycle = 2;
    rc.seed = 5;
    loss::LossConfig lc;
    Trainer trainer(tiny_model(), lc, rc);
    CycleMetrics m = trainer.run_cycle(train, val);
    CHECK(m.steps == 4);
    CHECK(trainer.adam_steps() == 4);
  }

  TEST_CASE("identical seeds give identical logs and metrics") {
    data::RegionDataset ds = tiny_dataset(101);
    WindowSet train = window_set(ds, 8);
    WindowSet val = window_set(ds, 4);
    TrainRunConfig rc;
    rc.batch_size = 4;
    rc.epochs_per_cycle = 2;
    rc.seed = 7;
    loss::LossConfig lc;

    std::ostringstream log1, log2;
    Trainer t1(tiny_model(), lc, rc);
    Trainer t2(tiny_model(), lc, rc);
    TrainLog l1(&log1), l2(&log2);
    CycleMetrics m1 = t1.run_cycle(train, val, &l1);
    CycleMetrics m2 = t2.run_cycle(train, val, &l2);
    CHECK(log1.str() == log2.str());
    CHECK(m1.val_score == m2.val_score);
    CHECK(m1.train_total == m2.train_total);
  }

  TEST_CASE("lr trace is non-increasing within a cycle") {
    data::RegionDataset ds = tiny_dataset(102);
    WindowSet train = window_set(ds, 8);
    WindowSet val = window_set(ds, 2);
    TrainRunConfig rc;
    rc.batch_size = 2;
    rc.epochs_per_cycle = 2;
    rc.seed = 9;
    std::ostringstream log;
    Trainer trainer(tiny_model(), loss::LossConfig{}, rc);
    TrainLog tl(&log);
    trainer.run_cycle(train, val, &tl);

    std::istringstream in(log.str());
    std::string line;
    double prev = 1e9;
    int steps = 0;
    while (std::getline(in, line)) {
      const auto j = nlohmann::json::parse(line);
      if (j.at("type") != "step") continue;
      const double lr = j.at("lr").get<double>();
      CHECK(lr <= prev);
      prev = lr;
      ++steps;
    }
    CHECK(steps == 8);
  }
}

TEST_SUITE("fit") {
  TEST_CASE("stops after the first non-improving cycle and returns the best") {
    data::RegionDataset ds = tiny_dataset(103, 1, 80);
    WindowSet train = window_set(ds, 10);
    WindowSet val = window_set(ds, 4);
    TrainRunConfig rc;
    rc.batch_size = 5;
    rc.epochs_per_cycle = 1;
    rc.cycles_max = 12;
    rc.early_stop = true;
    rc.lr_max = 2e-3;
    rc.seed = 11;
    Trainer trainer(tiny_model(), loss::LossConfig{}, rc);
    Checkpoint best = trainer.fit(train, val);
    const auto& hist = trainer.history();
    REQUIRE(!hist.empty());

    double running_best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < hist.size(); ++i) {
      CHECK(hist[i].val_score < running_best);  // every non-final cycle improved
      running_best = std::min(running_best, hist[i].val_score);
    }
    if (hist.size() < size_t(rc.cycles_max)) {
      CHECK(hist.back().val_score >= running_best);  // the stopper failed to improve
    }
    double min_score = std::numeric_limits<double>::infinity();
    for (const auto& m : hist) min_score = std::min(min_score, m.val_score);
    CHECK(best.best_val_score == min_score);
  }

  TEST_CASE("runs to cycles_max with early stopping off") {
    data::RegionDataset ds = tiny_dataset(104);
    WindowSet train = window_set(ds, 6);
    WindowSet val = window_set(ds, 2);
    TrainRunConfig rc;
    rc.batch_size = 3;
    rc.epochs_per_cycle = 1;
    rc.cycles_max = 3;
    rc.early_stop = false;
    rc.seed = 13;
    Trainer trainer(tiny_model(), loss::LossConfig{}, rc);
    trainer.fit(train, val);
    CHECK(trainer.history().size() == 3);
    CHECK(trainer.cycles_completed() == 3);
  }
}

TEST_SUITE("finetune") {
  TEST_CASE("adds one cycle on train+val with a warm restart") {
    data::RegionDataset ds = tiny_dataset(105);
    WindowSet train = window_set(ds, 9);
    WindowSet val = window_set(ds, 5);
    TrainRunConfig rc;
    rc.batch_size = 4;
    rc.epochs_per_cycle = 2;
    rc.cycles_max = 1;
    rc.early_stop = false;
    rc.seed = 15;
    Trainer trainer(tiny_model(), loss::LossConfig{}, rc);
    trainer.fit(train, val);
    const int64_t steps_before = trainer.adam_steps();

    std::ostringstream log;
    TrainLog tl(&log);
    Checkpoint ckpt = trainer.finetune_on_validation(train, val, &tl);

    // ceil((9+5)/4) = 4 steps per epoch, 2 epochs
    CHECK(trainer.adam_steps() - steps_before == 8);
    CHECK(ckpt.finetuned);

    std::istringstream in(log.str());
    std::string line;
    bool first_seen = false;
    while (std::getline(in, line) && !first_seen) {
      const auto j = nlohmann::json::parse(line);
      if (j.at("type") != "step") continue;
      CHECK(j.at("lr").get<double>() == doctest::Approx(rc.lr_max).epsilon(1e-15));
      first_seen = true;
    }
    CHECK(first_seen);
  }
}

TEST_SUITE("checkpoint") {
  TEST_CASE("save/load round-trips bit-exactly") {
    data::RegionDataset ds = tiny_dataset(106);
    WindowSet train = window_set(ds, 6);
    WindowSet val = window_set(ds, 2);
    TrainRunConfig rc;
    rc.batch_size = 3;
    rc.epochs_per_cycle = 1;
    rc.seed = 17;
    Trainer trainer(tiny_model(), loss::LossConfig{}, rc);
    trainer.run_cycle(train, val);
    Checkpoint ckpt = trainer.snapshot();

    const std::string path = temp_path("roundtrip.ckpt");
    save_checkpoint(ckpt, path);
    Checkpoint back = load_checkpoint(path);

    CHECK(back.has_training);
    CHECK(back.rng_seed == ckpt.rng_seed);
    CHECK(back.rng_position == ckpt.rng_position);
    CHECK(back.opt.step == ckpt.opt.step);
    CHECK(back.cycles_completed == ckpt.cycles_completed);
    CHECK(back.best_val_score == ckpt.best_val_score);
    REQUIRE(back.history.size() == ckpt.history.size());
    CHECK(back.history[0].val_score == ckpt.history[0].val_score);

    std::vector<double> a, b;
    ckpt.params.for_each([&](const std::string&, ParamTensor& p) {
      a.insert(a.end(), p.value.begin(), p.value.end());
    });
    back.params.for_each([&](const std::string&, ParamTensor& p) {
      b.insert(b.end(), p.value.begin(), p.value.end());
    });
    CHECK(a == b);
    for (size_t i = 0; i < ckpt.opt.m.size(); ++i) {
      CHECK(ckpt.opt.m[i] == back.opt.m[i]);
      CHECK(ckpt.opt.v[i] == back.opt.v[i]);
    }
  }

  TEST_CASE("model-only checkpoint round-trips") {
    model::ModelConfig cfg = tiny_model();
    model::VUNet net(cfg, 19);
    const std::string path = temp_path("model.ckpt");
    save_model_checkpoint(cfg, net.params(), path);
    Checkpoint back = load_checkpoint(path);
    CHECK(!back.has_training);
    CHECK(back.model_cfg.base_width == cfg.base_width);
    std::vector<double> a, b;
    net.params().for_each([&](const std::string&, ParamTensor& p) {
      a.insert(a.end(), p.value.begin(), p.value.end());
    });
    back.params.for_each([&](const std::string&, ParamTensor& p) {
      b.insert(b.end(), p.value.begin(), p.value.end());
    });
    CHECK(a == b);
  }

  TEST_CASE("truncated file is a structured error") {
    model::ModelConfig cfg = tiny_model();
    model::VUNet net(cfg, 21);
    const std::string path = temp_path("trunc.ckpt");
    save_model_checkpoint(cfg, net.params(), path);
    const auto size = fs::file_size(path);
    fs::resize_file(path, size / 2);
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
  }

  TEST_CASE("manifest config inconsistent with blobs is a validation error") {
    model::ModelConfig cfg = tiny_model();
    model::VUNet net(cfg, 23);
    const std::string path = temp_path("mismatch.ckpt");
    save_model_checkpoint(cfg, net.params(), path);

    // rewrite the embedded manifest with a different width
    std::ifstream in(path, std::ios::binary);
    char magic[8];
    in.read(magic, 8);
    uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 8);
    std::string text(len, '\0');
    in.read(text.data(), std::streamsize(len));
    std::vector<char> rest((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    in.close();
    auto manifest = nlohmann::json::parse(text);
    manifest["model"]["base_width"] = 8;
    const std::string text2 = manifest.dump();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(magic, 8);
    const uint64_t len2 = text2.size();
    out.write(reinterpret_cast<const char*>(&len2), 8);
    out.write(text2.data(), std::streamsize(text2.size()));
    out.write(rest.data(), std::streamsize(rest.size()));
    out.close();

    CHECK_THROWS_AS(load_checkpoint(path), IoError);
  }

  TEST_CASE("resume continues bit-identically") {
    data::RegionDataset ds = tiny_dataset(107);
    WindowSet train = window_set(ds, 8);
    WindowSet val = window_set(ds, 3);
    loss::LossConfig lc;

    TrainRunConfig rc_full;
    rc_full.batch_size = 4;
    rc_full.epochs_per_cycle = 1;
    rc_full.cycles_max = 3;
    rc_full.early_stop = false;
    rc_full.seed = 25;

    Trainer straight(tiny_model(), lc, rc_full);
    straight.fit(train, val);

    TrainRunConfig rc_half = rc_full;
    rc_half.cycles_max = 1;
    Trainer first_leg(tiny_model(), lc, rc_half);
    first_leg.fit(train, val);
    const std::string path = temp_path("resume.ckpt");
    save_checkpoint(first_leg.snapshot(), path);

    Checkpoint mid = load_checkpoint(path);
    Trainer second_leg(mid, lc, rc_full);
    second_leg.fit(train, val);

    std::vector<double> a, b;
    straight.get_model().params().for_each([&](const std::string&, ParamTensor& p) {
      a.insert(a.end(), p.value.begin(), p.value.end());
    });
    second_leg.get_model().params().for_each([&](const std::string&, ParamTensor& p) {
      b.insert(b.end(), p.value.begin(), p.value.end());
    });
    CHECK(a == b);
    REQUIRE(straight.history().size() == second_leg.history().size());
    for (size_t i = 0; i < straight.history().size(); ++i) {
      CHECK(straight.history()[i].val_score == second_leg.history()[i].val_score);
      CHECK(straight.history()[i].train_total == second_leg.history()[i].train_total);
    }
  }
}
