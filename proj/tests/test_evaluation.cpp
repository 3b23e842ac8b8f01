#include <cmath>
#include <sstream>

#include "doctest.h"
#include "test_util.hpp"
#include "vw4c/errors.hpp"
#include "vw4c/evaluation.hpp"

using namespace vw4c;
using namespace vw4c::eval;
using vw4c::testutil::random_grid;

namespace {

Mask4D full_mask(int b, int c, int h, int w) { return Mask4D(b, c, h, w, 1); }

// one day, constant-in-time channels: persistence is exact
data::RegionDataset static_scene_dataset() {
  data::SynthConfig cfg;
  cfg.size = 8;
  cfg.days = 1;
  cfg.frames_per_day = 40;
  cfg.missing_rate = 0.0;
  data::RegionDataset ds = data::synth_generate(cfg, 31);
  const int hw = ds.height * ds.width;
  for (auto& [name, ch] : ds.days[0].channels) {
    for (int t = 1; t < ds.days[0].frames; ++t) {
      for (int i = 0; i < hw; ++i) ch.values[size_t(t) * hw + i] = ch.values[size_t(i)];
    }
  }
  return ds;
}

}  // namespace

TEST_SUITE("score") {
  TEST_CASE("perfect predictions score zero everywhere") {
    RngStream rng(1);
    Grid4D target = random_grid(2, 128, 4, 4, rng);
    ScoreReport r = score({target, target}, {target, target},
                          {full_mask(2, 128, 4, 4), full_mask(2, 128, 4, 4)});
    CHECK(r.aggregate == 0.0);
    for (double v : r.per_variable) CHECK(v == 0.0);
    for (double v : r.per_leadtime) CHECK(v == 0.0);
    CHECK(r.samples == 4);
  }

  TEST_CASE("constant temperature error reproduces the loss value") {
    Grid4D pred(1, 128, 4, 4);
    Grid4D target(1, 128, 4, 4);
    for (int t = 0; t < 32; ++t)
      for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) pred.at(0, t * 4 + 0, y, x) = 1.0;
    ScoreReport r = score({pred}, {target}, {full_mask(1, 128, 4, 4)});
    CHECK(r.aggregate == doctest::Approx(7.9025).epsilon(1e-9));
  }

  TEST_CASE("sample order does not matter") {
    RngStream rng(2);
    Grid4D p1 = random_grid(1, 128, 3, 3, rng);
    Grid4D p2 = random_grid(1, 128, 3, 3, rng);
    Grid4D t1 = random_grid(1, 128, 3, 3, rng);
    Grid4D t2 = random_grid(1, 128, 3, 3, rng);
    Mask4D m = full_mask(1, 128, 3, 3);
    ScoreReport a = score({p1, p2}, {t1, t2}, {m, m});
    ScoreReport b = score({p2, p1}, {t2, t1}, {m, m});
    CHECK(a.aggregate == doctest::Approx(b.aggregate).epsilon(1e-13));
  }

  TEST_CASE("agrees with masked_l2 on identical inputs") {
    RngStream rng(3);
    Grid4D pred = random_grid(3, 128, 4, 4, rng);
    Grid4D target = random_grid(3, 128, 4, 4, rng);
    Mask4D mask(3, 128, 4, 4);
    for (int64_t i = 0; i < mask.size(); ++i) mask.data()[i] = rng.uniform() < 0.7 ? 1 : 0;
    const double loss_value = loss::masked_l2(pred, target, mask, {});
    ScoreAccumulator acc;
    acc.add(pred, target, mask);
    const double score_value = acc.report().aggregate;
    CHECK(score_value == doctest::Approx(loss_value).epsilon(1e-12));
  }

  TEST_CASE("empty sample set rejected") {
    ScoreAccumulator acc;
    CHECK_THROWS_AS(acc.report(), ConfigError);
  }

  TEST_CASE("extra masking only removes terms") {
    RngStream rng(4);
    Grid4D pred = random_grid(1, 128, 3, 3, rng);
    Grid4D target = random_grid(1, 128, 3, 3, rng);
    Mask4D mask = full_mask(1, 128, 3, 3);
    // reconstruct the shrunk-mask score from per-pixel contributions
    Mask4D smaller = mask;
    for (int64_t i = 0; i < smaller.size(); ++i) {
      if (rng.uniform() < 0.3) smaller.data()[i] = 0;
    }
    ScoreAccumulator acc;
    acc.add(pred, target, smaller);
    const double got = acc.report().aggregate;

    loss::VariableWeights w;
    double expect = 0.0;
    for (int t = 0; t < 32; ++t) {
      for (int v = 0; v < 4; ++v) {
        const int c = t * 4 + v;
        double sq = 0.0;
        int64_t count = 0;
        for (int y = 0; y < 3; ++y)
          for (int x = 0; x < 3; ++x) {
            if (!smaller.at(0, c, y, x)) continue;
            const double d = pred.at(0, c, y, x) - target.at(0, c, y, x);
            sq += d * d;
            ++count;
          }
        if (count > 0) expect += w.weight(loss::TargetVariable(v)) / double(count) * sq;
      }
    }
    expect /= 32.0 * 4.0;
    CHECK(got == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_SUITE("mean_baseline") {
  TEST_CASE("constant training data predicts the constant") {
    data::RegionDataset ds = static_scene_dataset();
    MeanBaseline mb = MeanBaseline::fit({{&ds, {0}}});
    Grid4D pred = mb.predict(ds.region_id);
    CHECK(pred.shape() == Shape4{1, 128, 8, 8});
    const int hw = 64;
    const auto& temp = ds.days[0].channels.at("temperature");
    for (int i = 0; i < hw; ++i) {
      const double expect = ds.normalize("temperature", temp.values[size_t(i)]);
      CHECK(pred.data()[i] == doctest::Approx(expect).epsilon(1e-6));
      // identical across lead times
      CHECK(pred.data()[size_t(31 * 4 + 0) * hw + i] == pred.data()[i]);
    }
  }

  TEST_CASE("two-frame series averages to the midpoint") {
    data::RegionDataset ds;
    ds.region_id = "T";
    ds.height = ds.width = 1;
    ds.frames_per_day = 2;
    ds.ranges = {{"temperature", {0.0, 100.0}},
                 {"crr_intensity", {0.0, 1.0}},
                 {"asii_turb_trop_prob", {0.0, 1.0}},
                 {"cma", {0.0, 1.0}}};
    data::DayRecord day;
    day.frames = 2;
    for (const auto& name : data::target_variables()) {
      day.channels[name].values = {0.0f, 0.0f};
      day.channels[name].mask = {1, 1};
    }
    day.channels["temperature"].values = {10.0f, 20.0f};
    ds.days.push_back(day);

    MeanBaseline mb = MeanBaseline::fit({{&ds, {0}}});
    Grid4D pred = mb.predict("T");
    CHECK(pred.data()[0] == doctest::Approx(ds.normalize("temperature", 15.0)).epsilon(1e-12));
  }

  TEST_CASE("never-valid pixel falls back to the variable global mean") {
    data::RegionDataset ds;
    ds.region_id = "F";
    ds.height = 1;
    ds.width = 2;
    ds.frames_per_day = 2;
    ds.ranges = {{"temperature", {0.0, 100.0}},
                 {"crr_intensity", {0.0, 1.0}},
                 {"asii_turb_trop_prob", {0.0, 1.0}},
                 {"cma", {0.0, 1.0}}};
    data::DayRecord day;
    day.frames = 2;
    for (const auto& name : data::target_variables()) {
      day.channels[name].values = {0.0f, 0.0f, 0.0f, 0.0f};
      day.channels[name].mask = {1, 1, 1, 1};
    }
    // pixel 0 never valid; pixel 1 sees 30 then 50
    day.channels["temperature"].values = {0.0f, 30.0f, 0.0f, 50.0f};
    day.channels["temperature"].mask = {0, 1, 0, 1};
    ds.days.push_back(day);

    MeanBaseline mb = MeanBaseline::fit({{&ds, {0}}});
    Grid4D pred = mb.predict("F");
    CHECK(pred.data()[1] == doctest::Approx(ds.normalize("temperature", 40.0)).epsilon(1e-12));
    CHECK(pred.data()[0] == doctest::Approx(ds.normalize("temperature", 40.0)).epsilon(1e-12));
  }

  TEST_CASE("unknown region rejected") {
    data::RegionDataset ds = static_scene_dataset();
    MeanBaseline mb = MeanBaseline::fit({{&ds, {0}}});
    CHECK_THROWS_AS(mb.predict("nope"), ConfigError);
  }
}

TEST_SUITE("persistence_baseline") {
  TEST_CASE("static scene scores zero on valid pixels") {
    data::RegionDataset ds = static_scene_dataset();
    data::FeatureSpec spec;
    data::SampleWindow w = data::make_window(ds, 0, 0, spec);
    Grid4D pred = persistence_baseline(w, spec);
    CHECK(pred.shape() == Shape4{1, 128, 8, 8});
    ScoreAccumulator acc;
    acc.add(pred, w.target, w.target_mask);
    CHECK(acc.report().aggregate == doctest::Approx(0.0).epsilon(1e-12));
  }

  TEST_CASE("per-leadtime error trends upward on advecting scenes") {
    data::SynthConfig cfg;
    cfg.size = 8;
    cfg.days = 3;
    cfg.frames_per_day = 96;
    cfg.missing_rate = 0.0;
    data::FeatureSpec spec;
    ScoreAccumulator acc;
    int windows = 0;
    for (uint64_t seed : {41ull, 42ull, 43ull}) {
      cfg.region_id = "R" + std::to_string(seed);
      data::RegionDataset ds = data::synth_generate(cfg, seed);
      for (const data::WindowKey& key : data::window_split(ds, 4)) {
        data::SampleWindow w = data::make_window(ds, key.day, key.start, spec);
        acc.add(persistence_baseline(w, spec), w.target, w.target_mask);
        ++windows;
      }
    }
    CHECK(windows >= 100);
    ScoreReport r = acc.report();
    double head = 0.0, tail = 0.0;
    for (int t = 0; t < 8; ++t) head += r.per_leadtime[size_t(t)];
    for (int t = 24; t < 32; ++t) tail += r.per_leadtime[size_t(t)];
    CHECK(r.per_leadtime[31] > r.per_leadtime[0]);
    CHECK(tail > head);
  }
}

TEST_SUITE("report") {
  TEST_CASE("empty list renders header only") {
    const std::string csv = render_report({}, ReportFormat::csv);
    CHECK(csv == "model,validation,test,temperature,crr_intensity,asii_turb_trop_prob,cma\n");
  }

  TEST_CASE("csv numbers round-trip through a parser") {
    NamedReport row;
    row.name = "candidate";
    row.validation = 0.39121887;
    row.test.aggregate = 0.49773311;
    row.test.per_variable = {0.1, 0.22, 0.333, 0.4444};
    const std::string csv = render_report({row}, ReportFormat::csv);

    std::istringstream in(csv);
    std::string header, line;
    std::getline(in, header);
    std::getline(in, line);
    std::istringstream cells(line);
    std::string cell;
    std::getline(cells, cell, ',');
    CHECK(cell == "candidate");
    std::getline(cells, cell, ',');
    CHECK(std::stod(cell) == *row.validation);
    std::getline(cells, cell, ',');
    CHECK(std::stod(cell) == row.test.aggregate);
    for (int v = 0; v < 4; ++v) {
      std::getline(cells, cell, ',');
      CHECK(std::stod(cell) == row.test.per_variable[size_t(v)]);
    }
  }

  TEST_CASE("text format includes all rows in order") {
    NamedReport a;
    a.name = "model";
    a.test.aggregate = 0.5;
    NamedReport b;
    b.name = "mean-baseline";
    b.test.aggregate = 0.9;
    const std::string text = render_report({a, b}, ReportFormat::text);
    const size_t pa = text.find("model");
    const size_t pb = text.find("mean-baseline");
    CHECK(pa != std::string::npos);
    CHECK(pb != std::string::npos);
    CHECK(pa < pb);
  }
}
