#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "test_util.hpp"
#include "vw4c/dataset.hpp"
#include "vw4c/errors.hpp"

using namespace vw4c;
using namespace vw4c::data;

namespace {

namespace fs = std::filesystem;

std::string temp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("vw4c_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

bool datasets_equal(const RegionDataset& a, const RegionDataset& b) {
  if (a.region_id != b.region_id || a.height != b.height || a.width != b.width) return false;
  if (a.days.size() != b.days.size()) return false;
  for (size_t d = 0; d < a.days.size(); ++d) {
    if (a.days[d].frames != b.days[d].frames) return false;
    if (a.days[d].channels.size() != b.days[d].channels.size()) return false;
    for (const auto& [name, ch] : a.days[d].channels) {
      auto it = b.days[d].channels.find(name);
      if (it == b.days[d].channels.end()) return false;
      if (ch.values != it->second.values || ch.mask != it->second.mask) return false;
    }
  }
  if (a.statics != b.statics) return false;
  if (a.ranges.size() != b.ranges.size()) return false;
  for (const auto& [name, r] : a.ranges) {
    auto it = b.ranges.find(name);
    if (it == b.ranges.end() || it->second.lo != r.lo || it->second.hi != r.hi) return false;
  }
  return true;
}

SynthConfig small_synth() {
  SynthConfig cfg;
  cfg.size = 8;
  cfg.days = 2;
  cfg.frames_per_day = 40;
  cfg.missing_rate = 0.1;
  return cfg;
}

}  // namespace

TEST_SUITE("feature_spec") {
  TEST_CASE("default channel count is 35") {
    FeatureSpec spec;
    CHECK(spec.input_channels() == 35);
    CHECK(spec.effective_dynamic().size() == 8);
  }

  TEST_CASE("ctth_alt raises the count to 39") {
    FeatureSpec spec;
    spec.use_ctth_alt = true;
    CHECK(spec.input_channels() == 39);
  }

  TEST_CASE("duplicate names rejected") {
    FeatureSpec spec;
    spec.dynamic.push_back("temperature");
    CHECK_THROWS_AS(spec.validate(), ConfigError);
  }
}

TEST_SUITE("zero_fill") {
  TEST_CASE("full and empty masks") {
    std::vector<double> v = {1.0, 2.0, 3.0};
    CHECK(zero_fill(v, {1, 1, 1}) == v);
    CHECK(zero_fill(v, {0, 0, 0}) == std::vector<double>{0.0, 0.0, 0.0});
  }

  TEST_CASE("matches elementwise select") {
    RngStream rng(1);
    std::vector<double> v(64);
    std::vector<uint8_t> m(64);
    for (size_t i = 0; i < v.size(); ++i) {
      v[i] = rng.uniform();
      m[i] = rng.uniform() < 0.5 ? 1 : 0;
    }
    std::vector<double> out = zero_fill(v, m);
    for (size_t i = 0; i < v.size(); ++i) {
      CHECK(out[i] == (m[i] ? v[i] : 0.0));
    }
  }
}

TEST_SUITE("interpolate_temporal") {
  TEST_CASE("no gaps is identity") {
    ChannelFrames s;
    s.values = {1, 2, 3, 4};
    s.mask = {1, 1, 1, 1};
    ChannelFrames out = interpolate_temporal(s, 4, 1);
    CHECK(out.values == s.values);
    CHECK(out.mask == s.mask);
  }

  TEST_CASE("midpoint fill") {
    ChannelFrames s;
    s.values = {10, 0, 20};
    s.mask = {1, 0, 1};
    ChannelFrames out = interpolate_temporal(s, 3, 1);
    CHECK(out.values[1] == 15.0f);
    CHECK(out.mask[1] == 1);
  }

  TEST_CASE("leading and trailing gaps stay missing") {
    ChannelFrames s;
    s.values = {0, 5, 0, 9, 0};
    s.mask = {0, 1, 0, 1, 0};
    ChannelFrames out = interpolate_temporal(s, 5, 1);
    CHECK(out.mask[0] == 0);
    CHECK(out.mask[4] == 0);
    CHECK(out.mask[2] == 1);
    CHECK(out.values[2] == 7.0f);
  }

  TEST_CASE("matches per-pixel scan-line oracle on random patterns") {
    RngStream rng(2);
    const int frames = 12, pixels = 6;
    ChannelFrames s;
    s.values.resize(size_t(frames) * pixels);
    s.mask.resize(size_t(frames) * pixels);
    for (size_t i = 0; i < s.values.size(); ++i) {
      s.values[i] = float(rng.uniform() * 10.0);
      s.mask[i] = rng.uniform() < 0.6 ? 1 : 0;
    }
    ChannelFrames out = interpolate_temporal(s, frames, pixels);

    // oracle: explicit nearest-valid-neighbor walk per query point
    for (int p = 0; p < pixels; ++p) {
      for (int t = 0; t < frames; ++t) {
        const size_t k = size_t(t) * pixels + p;
        if (s.mask[k]) {
          CHECK(out.values[k] == s.values[k]);  // valid points untouched
          CHECK(out.mask[k] == 1);
          continue;
        }
        int lo = t - 1, hi = t + 1;
        while (lo >= 0 && !s.mask[size_t(lo) * pixels + p]) --lo;
        while (hi < frames && !s.mask[size_t(hi) * pixels + p]) ++hi;
        if (lo < 0 || hi >= frames) {
          CHECK(out.mask[k] == 0);  // boundary gap remains missing
        } else {
          const double v0 = s.values[size_t(lo) * pixels + p];
          const double v1 = s.values[size_t(hi) * pixels + p];
          const double expect = v0 + (v1 - v0) * double(t - lo) / double(hi - lo);
          CHECK(out.mask[k] == 1);
          CHECK(out.values[k] == doctest::Approx(float(expect)).epsilon(1e-6));
        }
      }
    }
  }
}

TEST_SUITE("assemble_input") {
  TEST_CASE("default spec builds 35 channels, statics last") {
    RegionDataset ds = synth_generate(small_synth(), 10);
    Grid4D x = assemble_input(ds, 0, 0, FeatureSpec{});
    CHECK(x.shape() == Shape4{1, 35, 8, 8});
    CHECK(x.all_finite());
  }

  TEST_CASE("all-missing temperature frame zeroes both value and mask channel") {
    SynthConfig cfg = small_synth();
    cfg.missing_rate = 0.0;
    RegionDataset ds = synth_generate(cfg, 11);
    const int hw = ds.height * ds.width;
    // void out temperature in the window's second frame (start=0 -> frame 1)
    ChannelFrames& temp = ds.days[0].channels["temperature"];
    for (int i = 0; i < hw; ++i) temp.mask[size_t(1) * hw + i] = 0;

    FeatureSpec spec;
    Grid4D x = assemble_input(ds, 0, 0, spec);
    const auto dynamic = spec.effective_dynamic();
    const int n_dyn = int(dynamic.size());
    const int temp_idx = 0;  // temperature is first
    const int mask_idx = 7;  // ctth_tempe_mask is last dynamic feature
    for (int i = 0; i < hw; ++i) {
      CHECK(x.data()[size_t(1 * n_dyn + temp_idx) * hw + i] == 0.0);
      CHECK(x.data()[size_t(1 * n_dyn + mask_idx) * hw + i] == 0.0);
    }
    // other frames keep a live mask channel
    bool any_valid = false;
    for (int i = 0; i < hw; ++i) {
      if (x.data()[size_t(0 * n_dyn + mask_idx) * hw + i] == 1.0) any_valid = true;
    }
    CHECK(any_valid);
  }

  TEST_CASE("zero-fill happens after normalization") {
    SynthConfig cfg = small_synth();
    cfg.missing_rate = 0.0;
    RegionDataset ds = synth_generate(cfg, 12);
    const int hw = ds.height * ds.width;
    ChannelFrames& temp = ds.days[0].channels["temperature"];
    temp.mask[0] = 0;  // one missing pixel in frame 0
    Grid4D x = assemble_input(ds, 0, 0, FeatureSpec{});
    CHECK(x.data()[0] == 0.0);  // fill value in model space is exactly 0
    // valid temperature pixels are normalized into [0, 1]
    for (int i = 1; i < hw; ++i) {
      CHECK(x.data()[i] >= 0.0);
      CHECK(x.data()[i] <= 1.0);
    }
  }

  TEST_CASE("interpolated temperature feeds filled values but keeps the raw mask channel") {
    SynthConfig cfg = small_synth();
    cfg.missing_rate = 0.0;
    RegionDataset ds = synth_generate(cfg, 13);
    const int hw = ds.height * ds.width;
    ChannelFrames& temp = ds.days[0].channels["temperature"];
    // pixel 3 missing at frame 1, valid neighbors at frames 0 and 2
    temp.mask[size_t(1) * hw + 3] = 0;

    FeatureSpec raw;
    Grid4D x_raw = assemble_input(ds, 0, 0, raw);
    FeatureSpec interp;
    interp.interpolate_temperature = true;
    Grid4D x_int = assemble_input(ds, 0, 0, interp);

    const int n_dyn = 8;
    const size_t val_at = size_t(1 * n_dyn + 0) * hw + 3;
    const size_t mask_at = size_t(1 * n_dyn + 7) * hw + 3;
    CHECK(x_raw.data()[val_at] == 0.0);
    CHECK(x_int.data()[val_at] != 0.0);  // interpolation filled it
    CHECK(x_raw.data()[mask_at] == 0.0);
    CHECK(x_int.data()[mask_at] == 0.0);  // measurement mask unchanged
  }
}

TEST_SUITE("extract_targets") {
  TEST_CASE("shape is always 1x128xHxW") {
    RegionDataset ds = synth_generate(small_synth(), 14);
    auto [y, m] = extract_targets(ds, 0, 0);
    CHECK(y.shape() == Shape4{1, 128, 8, 8});
    CHECK(m.shape() == Shape4{1, 128, 8, 8});
  }

  TEST_CASE("fully missing cma frame masks its channel") {
    SynthConfig cfg = small_synth();
    cfg.missing_rate = 0.0;
    RegionDataset ds = synth_generate(cfg, 15);
    const int hw = ds.height * ds.width;
    ChannelFrames& cma = ds.days[0].channels["cma"];
    const int frame = 4 + 5;  // lead time 5
    for (int i = 0; i < hw; ++i) cma.mask[size_t(frame) * hw + i] = 0;
    auto [y, m] = extract_targets(ds, 0, 0);
    const int c = 5 * 4 + 3;  // cma is variable index 3
    for (int i = 0; i < hw; ++i) {
      CHECK(m.data()[size_t(c) * hw + i] == 0);
      CHECK(y.data()[size_t(c) * hw + i] == 0.0);
    }
  }

  TEST_CASE("normalize/denormalize round-trip") {
    RegionDataset ds = synth_generate(small_synth(), 16);
    RngStream rng(17);
    for (const char* name : {"temperature", "crr_intensity", "asii_turb_trop_prob", "cma"}) {
      for (int i = 0; i < 50; ++i) {
        const ChannelRange& r = ds.range(name);
        const double v = r.lo + (r.hi - r.lo) * rng.uniform();
        CHECK(ds.denormalize(name, ds.normalize(name, v)) == doctest::Approx(v).epsilon(1e-12));
      }
    }
  }
}

TEST_SUITE("window_split") {
  TEST_CASE("window counts") {
    SynthConfig cfg = small_synth();
    cfg.days = 1;
    cfg.frames_per_day = 36;
    CHECK(window_split(synth_generate(cfg, 18), 1).size() == 1);
    cfg.frames_per_day = 96;
    CHECK(window_split(synth_generate(cfg, 18), 1).size() == 61);
    cfg.frames_per_day = 35;
    CHECK(window_split(synth_generate(cfg, 18), 1).empty());
  }

  TEST_CASE("windows never straddle day boundaries") {
    SynthConfig cfg = small_synth();
    cfg.days = 3;
    cfg.frames_per_day = 40;
    RegionDataset ds = synth_generate(cfg, 19);
    const auto keys = window_split(ds, 1);
    CHECK(keys.size() == size_t(3 * (40 - 36 + 1)));
    for (const WindowKey& k : keys) {
      CHECK(k.start + kWindowFrames <= ds.days[size_t(k.day)].frames);
    }
  }

  TEST_CASE("stride controls the lattice") {
    SynthConfig cfg = small_synth();
    cfg.days = 1;
    cfg.frames_per_day = 96;
    RegionDataset ds = synth_generate(cfg, 20);
    const auto keys = window_split(ds, 12);
    CHECK(keys.size() == 6);  // starts 0,12,24,36,48,60
    CHECK(keys.back().start == 60);
  }
}

TEST_SUITE("synth_generate") {
  TEST_CASE("same seed gives bit-identical datasets") {
    RegionDataset a = synth_generate(small_synth(), 21);
    RegionDataset b = synth_generate(small_synth(), 21);
    CHECK(datasets_equal(a, b));
    RegionDataset c = synth_generate(small_synth(), 22);
    CHECK(!datasets_equal(a, c));
  }

  TEST_CASE("zero missing rate gives full masks") {
    SynthConfig cfg = small_synth();
    cfg.missing_rate = 0.0;
    RegionDataset ds = synth_generate(cfg, 23);
    for (const DayRecord& day : ds.days) {
      for (const auto& [name, ch] : day.channels) {
        for (uint8_t m : ch.mask) CHECK(m == 1);
      }
    }
  }

  TEST_CASE("generated values respect their declared ranges") {
    RegionDataset ds = synth_generate(small_synth(), 24);
    for (const DayRecord& day : ds.days) {
      for (float v : day.channels.at("cma").values) CHECK((v == 0.0f || v == 1.0f));
      for (float v : day.channels.at("crr_intensity").values) CHECK(v >= 0.0f);
      for (float v : day.channels.at("asii_turb_trop_prob").values) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
      }
      for (float v : day.channels.at("ct").values) {
        CHECK(v >= 0.0f);
        CHECK(v <= 8.0f);
        CHECK(v == std::floor(v));
      }
      for (float v : day.channels.at("temperature").values) {
        CHECK(v >= 200.0f);
        CHECK(v <= 320.0f);
      }
    }
  }

  TEST_CASE("nonzero missing rate produces some gaps") {
    SynthConfig cfg = small_synth();
    cfg.missing_rate = 0.3;
    RegionDataset ds = synth_generate(cfg, 25);
    int64_t missing = 0;
    for (const auto& [name, ch] : ds.days[0].channels) {
      for (uint8_t m : ch.mask) missing += m == 0 ? 1 : 0;
    }
    CHECK(missing > 0);
  }
}

TEST_SUITE("dataset_io") {
  TEST_CASE("write then read is bit-identical") {
    const std::string dir = temp_dir("roundtrip");
    RegionDataset ds = synth_generate(small_synth(), 26);
    write_dataset(ds, dir);
    RegionDataset back = read_dataset(dir);
    CHECK(datasets_equal(ds, back));
  }

  TEST_CASE("corrupted blob byte raises a checksum error naming the file") {
    const std::string dir = temp_dir("corrupt");
    RegionDataset ds = synth_generate(small_synth(), 27);
    write_dataset(ds, dir);
    const std::string victim = dir + "/d000_temperature.vw4c";
    {
      std::fstream f(victim, std::ios::in | std::ios::out | std::ios::binary);
      f.seekp(60);
      char byte = 0;
      f.seekg(60);
      f.read(&byte, 1);
      byte = char(byte ^ 0x5A);
      f.seekp(60);
      f.write(&byte, 1);
    }
    try {
      read_dataset(dir);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find("d000_temperature.vw4c") != std::string::npos);
      CHECK(std::string(e.what()).find("checksum") != std::string::npos);
    }
  }

  TEST_CASE("manifest shape mismatch is a validation error") {
    const std::string dir = temp_dir("manifest");
    RegionDataset ds = synth_generate(small_synth(), 28);
    write_dataset(ds, dir);
    nlohmann::json manifest;
    {
      std::ifstream f(dir + "/manifest.json");
      f >> manifest;
    }
    manifest["files"][0]["shape"][0] = manifest["files"][0]["shape"][0].get<int>() + 1;
    {
      std::ofstream f(dir + "/manifest.json");
      f << manifest.dump(2);
    }
    CHECK_THROWS_AS(read_dataset(dir), IoError);
  }

  TEST_CASE("missing file is a distinct error") {
    const std::string dir = temp_dir("missing");
    RegionDataset ds = synth_generate(small_synth(), 29);
    write_dataset(ds, dir);
    std::filesystem::remove(dir + "/d000_cma.vw4c");
    CHECK_THROWS_AS(read_dataset(dir), IoError);
  }

  TEST_CASE("version mismatch is a distinct error") {
    const std::string dir = temp_dir("version");
    RegionDataset ds = synth_generate(small_synth(), 30);
    write_dataset(ds, dir);
    nlohmann::json manifest;
    {
      std::ifstream f(dir + "/manifest.json");
      f >> manifest;
    }
    manifest["version"] = 99;
    {
      std::ofstream f(dir + "/manifest.json");
      f << manifest.dump(2);
    }
    try {
      read_dataset(dir);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find("version") != std::string::npos);
    }
  }
}
