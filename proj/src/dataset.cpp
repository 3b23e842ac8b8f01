#include "vw4c/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"
#include "vw4c/blob.hpp"
#include "vw4c/errors.hpp"
#include "vw4c/rng.hpp"

namespace vw4c::data {

namespace fs = std::filesystem;
using nlohmann::json;

const std::array<std::string, 4>& target_variables() {
  static const std::array<std::string, 4> vars = {"temperature", "crr_intensity",
                                                  "asii_turb_trop_prob", "cma"};
  return vars;
}

// ---------------------------------------------------------------------------
// FeatureSpec
// ---------------------------------------------------------------------------

std::vector<std::string> FeatureSpec::effective_dynamic() const {
  std::vector<std::string> names = dynamic;
  if (use_ctth_alt &&
      std::find(names.begin(), names.end(), "ctth_alt") == names.end()) {
    names.push_back("ctth_alt");
  }
  return names;
}

int FeatureSpec::input_channels() const {
  return kInputFrames * int(effective_dynamic().size()) + int(statics.size());
}

void FeatureSpec::validate() const {
  std::set<std::string> seen;
  for (const auto& n : effective_dynamic()) {
    if (!seen.insert(n).second) throw ConfigError("FeatureSpec: duplicate channel " + n);
  }
  for (const auto& n : statics) {
    if (!seen.insert(n).second) throw ConfigError("FeatureSpec: duplicate channel " + n);
  }
}

// ---------------------------------------------------------------------------
// RegionDataset
// ---------------------------------------------------------------------------

const ChannelRange& RegionDataset::range(const std::string& channel) const {
  auto it = ranges.find(channel);
  if (it == ranges.end()) throw ConfigError("no declared range for channel " + channel);
  return it->second;
}

double RegionDataset::normalize(const std::string& channel, double v) const {
  const ChannelRange& r = range(channel);
  return (v - r.lo) / (r.hi - r.lo);
}

double RegionDataset::denormalize(const std::string& channel, double v) const {
  const ChannelRange& r = range(channel);
  return v * (r.hi - r.lo) + r.lo;
}

// ---------------------------------------------------------------------------
// window assembly
// ---------------------------------------------------------------------------

std::vector<double> zero_fill(const std::vector<double>& values,
                              const std::vector<uint8_t>& mask) {
  if (values.size() != mask.size()) throw ConfigError("zero_fill: size mismatch");
  std::vector<double> out(values.size());
  for (size_t i = 0; i < values.size(); ++i) out[i] = mask[i] ? values[i] : 0.0;
  return out;
}

ChannelFrames interpolate_temporal(const ChannelFrames& series, int frames, int pixels) {
  if (int64_t(series.values.size()) != int64_t(frames) * pixels) {
    throw ConfigError("interpolate_temporal: series size mismatch");
  }
  ChannelFrames out = series;
  for (int p = 0; p < pixels; ++p) {
    int prev = -1;  // last valid frame index seen
    for (int t = 0; t < frames; ++t) {
      if (!series.mask[size_t(t) * pixels + p]) continue;
      if (prev >= 0 && t - prev > 1) {
        const double v0 = series.values[size_t(prev) * pixels + p];
        const double v1 = series.values[size_t(t) * pixels + p];
        for (int u = prev + 1; u < t; ++u) {
          const double a = double(u - prev) / double(t - prev);
          out.values[size_t(u) * pixels + p] = float(v0 + a * (v1 - v0));
          out.mask[size_t(u) * pixels + p] = 1;
        }
      }
      prev = t;
    }
  }
  return out;
}

namespace {

const DayRecord& day_at(const RegionDataset& ds, int day) {
  if (day < 0 || day >= int(ds.days.size())) {
    throw ConfigError("day index " + std::to_string(day) + " out of range");
  }
  return ds.days[size_t(day)];
}

const ChannelFrames& channel_of(const DayRecord& rec, const std::string& name) {
  auto it = rec.channels.find(name);
  if (it == rec.channels.end()) throw ConfigError("dataset is missing channel " + name);
  return it->second;
}

}  // namespace

Grid4D assemble_input(const RegionDataset& ds, int day, int start, const FeatureSpec& spec) {
  spec.validate();
  const DayRecord& rec = day_at(ds, day);
  if (start < 0 || start + kInputFrames > rec.frames) {
    throw ConfigError("assemble_input: frames [" + std::to_string(start) + ", " +
                      std::to_string(start + kInputFrames) + ") out of day range");
  }
  const int hw = ds.height * ds.width;
  const std::vector<std::string> dynamic = spec.effective_dynamic();
  const int channels = kInputFrames * int(dynamic.size()) + int(spec.statics.size());
  Grid4D x(1, channels, ds.height, ds.width);

  // interpolated views are built per day on demand
  std::map<std::string, ChannelFrames> interpolated;
  auto interpolated_view = [&](const std::string& name) -> const ChannelFrames& {
    auto it = interpolated.find(name);
    if (it == interpolated.end()) {
      it = interpolated.emplace(name, interpolate_temporal(channel_of(rec, name), rec.frames, hw))
               .first;
    }
    return it->second;
  };

  int c = 0;
  for (int f = 0; f < kInputFrames; ++f) {
    const int t = start + f;
    for (const std::string& name : dynamic) {
      double* out = x.data() + size_t(c) * hw;
      if (name == "ctth_tempe_mask") {
        // validity of the raw temperature measurements, as 0/1 values
        const ChannelFrames& temp = channel_of(rec, "temperature");
        for (int i = 0; i < hw; ++i) out[i] = temp.mask[size_t(t) * hw + i] ? 1.0 : 0.0;
      } else {
        const bool interp = (name == "temperature" && spec.interpolate_temperature) ||
                            (name == "ctth_pres" && spec.interpolate_ctth_pres);
        const ChannelFrames& ch = interp ? interpolated_view(name) : channel_of(rec, name);
        const ChannelRange& r = ds.range(name);
        const double inv = 1.0 / (r.hi - r.lo);
        for (int i = 0; i < hw; ++i) {
          const size_t k = size_t(t) * hw + i;
          out[i] = ch.mask[k] ? (ch.values[k] - r.lo) * inv : 0.0;
        }
      }
      ++c;
    }
  }
  for (const std::string& name : spec.statics) {
    auto it = ds.statics.find(name);
    if (it == ds.statics.end()) throw ConfigError("dataset is missing static channel " + name);
    double* out = x.data() + size_t(c) * hw;
    for (int i = 0; i < hw; ++i) out[i] = ds.normalize(name, it->second[size_t(i)]);
    ++c;
  }
  return x;
}

std::pair<Grid4D, Mask4D> extract_targets(const RegionDataset& ds, int day, int start) {
  const DayRecord& rec = day_at(ds, day);
  const int first = start + kInputFrames;
  if (start < 0 || first + kLeadTimes > rec.frames) {
    throw ConfigError("extract_targets: target frames out of day range");
  }
  const int hw = ds.height * ds.width;
  const int channels = kLeadTimes * int(target_variables().size());
  Grid4D y(1, channels, ds.height, ds.width);
  Mask4D m(1, channels, ds.height, ds.width);

  int c = 0;
  for (int lead = 0; lead < kLeadTimes; ++lead) {
    const int t = first + lead;
    for (const std::string& name : target_variables()) {
      const ChannelFrames& ch = channel_of(rec, name);
      const ChannelRange& r = ds.range(name);
      const double inv = 1.0 / (r.hi - r.lo);
      double* yd = y.data() + size_t(c) * hw;
      uint8_t* md = m.data() + size_t(c) * hw;
      for (int i = 0; i < hw; ++i) {
        const size_t k = size_t(t) * hw + i;
        md[i] = ch.mask[k];
        yd[i] = ch.mask[k] ? (ch.values[k] - r.lo) * inv : 0.0;
      }
      ++c;
    }
  }
  return {std::move(y), std::move(m)};
}

SampleWindow make_window(const RegionDataset& ds, int day, int start, const FeatureSpec& spec) {
  SampleWindow w;
  w.input = assemble_input(ds, day, start, spec);
  auto [target, mask] = extract_targets(ds, day, start);
  w.target = std::move(target);
  w.target_mask = std::move(mask);
  w.region = ds.region_id;
  w.day = day;
  w.start = start;
  return w;
}

std::vector<WindowKey> window_split(const RegionDataset& ds, int stride) {
  if (stride < 1) throw ConfigError("window_split: stride must be >= 1");
  std::vector<WindowKey> keys;
  for (int day = 0; day < int(ds.days.size()); ++day) {
    const int frames = ds.days[size_t(day)].frames;
    for (int start = 0; start + kWindowFrames <= frames; start += stride) {
      keys.push_back({day, start});
    }
  }
  return keys;
}

// ---------------------------------------------------------------------------
// synthetic generator
// ---------------------------------------------------------------------------

namespace {

// A frozen sum of plane waves advected at one shared velocity, normalized to
// [-1, 1]: f(x, y, t) = F(x - u t, y - v t).
struct WaveField {
  struct Mode {
    double kx, ky, phase, amp;
  };
  std::vector<Mode> modes;
  double u = 0.0, v = 0.0;  // pixels per frame
  double amp_total = 0.0;

  static WaveField draw(RngStream& rng, int n_modes, int size, double min_speed,
                        double max_speed, double min_waves = 0.5, double max_waves = 3.0) {
    WaveField f;
    const double speed = min_speed + (max_speed - min_speed) * rng.uniform();
    const double heading = 2.0 * M_PI * rng.uniform();
    f.u = speed * std::cos(heading);
    f.v = speed * std::sin(heading);
    for (int i = 0; i < n_modes; ++i) {
      Mode m;
      // wavelengths across the grid
      const double waves = min_waves + (max_waves - min_waves) * rng.uniform();
      const double theta = 2.0 * M_PI * rng.uniform();
      m.kx = 2.0 * M_PI * waves / size * std::cos(theta);
      m.ky = 2.0 * M_PI * waves / size * std::sin(theta);
      m.phase = 2.0 * M_PI * rng.uniform();
      m.amp = 0.5 + 0.5 * rng.uniform();
      f.amp_total += m.amp;
      f.modes.push_back(m);
    }
    return f;
  }

  double value(double x, double y, double t, double day_phase) const {
    const double xs = x - u * t;
    const double ys = y - v * t;
    double acc = 0.0;
    for (const Mode& m : modes) {
      acc += m.amp * std::sin(m.kx * xs + m.ky * ys + m.phase + day_phase);
    }
    return acc / amp_total;
  }
};

}  // namespace

RegionDataset synth_generate(const SynthConfig& cfg, uint64_t seed) {
  if (cfg.size < 1 || cfg.days < 1 || cfg.frames_per_day < 1) {
    throw ConfigError("synth_generate: size, days and frames_per_day must be positive");
  }
  if (cfg.missing_rate < 0.0 || cfg.missing_rate > 1.0) {
    throw ConfigError("synth_generate: missing_rate must be in [0, 1]");
  }

  RngStream rng(seed);
  RegionDataset ds;
  ds.region_id = cfg.region_id;
  ds.height = ds.width = cfg.size;
  ds.frames_per_day = cfg.frames_per_day;
  ds.ranges = {
      {"temperature", {200.0, 320.0}},  {"ctth_pres", {100.0, 1050.0}},
      {"ctth_alt", {0.0, 12000.0}},     {"crr_intensity", {0.0, 50.0}},
      {"crr_accum", {0.0, 50.0}},       {"asii_turb_trop_prob", {0.0, 1.0}},
      {"cma", {0.0, 1.0}},              {"ct", {0.0, 8.0}},
      {"altitude", {0.0, 3000.0}},      {"latitude", {-90.0, 90.0}},
      {"longitude", {-180.0, 180.0}},
  };

  // region-level structure; speeds are in pixels per frame, and rain uses
  // broader modes so that showers are coherent blobs rather than speckle
  const WaveField field_temp = WaveField::draw(rng, 4, cfg.size, 0.10, 0.25);
  const WaveField field_pres = WaveField::draw(rng, 2, cfg.size, 0.08, 0.20);
  const WaveField field_rain = WaveField::draw(rng, 2, cfg.size, 0.18, 0.45, 0.4, 1.2);
  const WaveField field_turb = WaveField::draw(rng, 3, cfg.size, 0.12, 0.35);
  const WaveField field_cloud = WaveField::draw(rng, 3, cfg.size, 0.12, 0.35);
  const WaveField field_terrain = WaveField::draw(rng, 3, cfg.size, 0.0, 0.0);
  const double lat0 = 35.0 + 20.0 * rng.uniform();
  const double lon0 = -10.0 + 40.0 * rng.uniform();

  const int hw = cfg.size * cfg.size;
  const std::vector<std::string> channel_names = {
      "temperature", "ctth_pres", "ctth_alt",            "crr_intensity",
      "crr_accum",   "asii_turb_trop_prob", "cma", "ct",
  };

  // statics
  std::vector<float> altitude(size_t(hw), 0.0f);
  std::vector<float> latitude(size_t(hw), 0.0f);
  std::vector<float> longitude(size_t(hw), 0.0f);
  for (int y = 0; y < cfg.size; ++y) {
    for (int x = 0; x < cfg.size; ++x) {
      altitude[size_t(y) * cfg.size + x] =
          float(1500.0 * (1.0 + field_terrain.value(x, y, 0.0, 0.0)));
      latitude[size_t(y) * cfg.size + x] = float(lat0 + 4.0 * (1.0 - double(y) / cfg.size));
      longitude[size_t(y) * cfg.size + x] = float(lon0 + 4.0 * double(x) / cfg.size);
    }
  }
  ds.statics = {{"altitude", altitude}, {"latitude", latitude}, {"longitude", longitude}};

  for (int day = 0; day < cfg.days; ++day) {
    DayRecord rec;
    rec.frames = cfg.frames_per_day;

    // each day is an independent realization of the same process
    const double ph_temp = 2.0 * M_PI * rng.uniform();
    const double ph_pres = 2.0 * M_PI * rng.uniform();
    const double ph_rain = 2.0 * M_PI * rng.uniform();
    const double ph_turb = 2.0 * M_PI * rng.uniform();
    const double ph_cloud = 2.0 * M_PI * rng.uniform();

    for (const std::string& name : channel_names) {
      rec.channels[name].values.assign(size_t(rec.frames) * hw, 0.0f);
      rec.channels[name].mask.assign(size_t(rec.frames) * hw, 1);
    }

    std::vector<double> rain_series(size_t(rec.frames) * hw, 0.0);
    for (int t = 0; t < rec.frames; ++t) {
      for (int y = 0; y < cfg.size; ++y) {
        for (int x = 0; x < cfg.size; ++x) {
          const size_t k = (size_t(t) * cfg.size + y) * cfg.size + x;
          const double ft = field_temp.value(x, y, t, ph_temp);
          const double fp = 0.7 * ft + 0.3 * field_pres.value(x, y, t, ph_pres);
          const double fr = field_rain.value(x, y, t, ph_rain);
          const double fa = field_turb.value(x, y, t, ph_turb);
          const double fc = -0.6 * ft + 0.8 * field_cloud.value(x, y, t, ph_cloud);

          rec.channels["temperature"].values[k] = float(260.0 + 45.0 * ft);
          rec.channels["ctth_pres"].values[k] = float(700.0 - 250.0 * fp);
          rec.channels["ctth_alt"].values[k] = float(5500.0 - 4000.0 * fp);
          const double rain = fr > 0.45 ? (fr - 0.45) / 0.55 * 35.0 : 0.0;
          rain_series[k] = rain;
          rec.channels["crr_intensity"].values[k] = float(rain);
          rec.channels["asii_turb_trop_prob"].values[k] = float(0.5 * (1.0 + fa));
          const double cloudy = fc > 0.15 ? 1.0 : 0.0;
          rec.channels["cma"].values[k] = float(cloudy);
          const int ct = cloudy == 0.0
                             ? 0
                             : 1 + std::min(7, int(std::floor((fc + 1.0) / 2.0 * 8.0)));
          rec.channels["ct"].values[k] = float(ct);
        }
      }
    }
    // hourly accumulation from the last 4 frames of intensity
    for (int t = 0; t < rec.frames; ++t) {
      for (int i = 0; i < hw; ++i) {
        double acc = 0.0;
        for (int u = std::max(0, t - 3); u <= t; ++u) {
          acc += rain_series[size_t(u) * hw + i];
        }
        rec.channels["crr_accum"].values[size_t(t) * hw + i] = float(0.25 * acc);
      }
    }

    // missingness: random rectangles per (channel, frame)
    if (cfg.missing_rate > 0.0) {
      for (const std::string& name : channel_names) {
        ChannelFrames& ch = rec.channels[name];
        for (int t = 0; t < rec.frames; ++t) {
          if (rng.uniform() >= cfg.missing_rate) continue;
          const int rh = 1 + int(rng.uniform_int(uint64_t(std::max(1, cfg.size / 2))));
          const int rw = 1 + int(rng.uniform_int(uint64_t(std::max(1, cfg.size / 2))));
          const int ry = int(rng.uniform_int(uint64_t(cfg.size - rh + 1)));
          const int rx = int(rng.uniform_int(uint64_t(cfg.size - rw + 1)));
          for (int y = ry; y < ry + rh; ++y) {
            for (int x = rx; x < rx + rw; ++x) {
              ch.mask[(size_t(t) * cfg.size + y) * cfg.size + x] = 0;
            }
          }
        }
      }
    }
    ds.days.push_back(std::move(rec));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// on-disk format
// ---------------------------------------------------------------------------

namespace {

std::string day_file(int day, const std::string& channel, const char* ext) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "d%03d_", day);
  return std::string(buf) + channel + ext;
}

}  // namespace

void write_dataset(const RegionDataset& ds, const std::string& dir) {
  fs::create_directories(dir);
  json files = json::array();

  for (int day = 0; day < int(ds.days.size()); ++day) {
    const DayRecord& rec = ds.days[size_t(day)];
    const std::vector<uint64_t> extents = {uint64_t(rec.frames), uint64_t(ds.height),
                                           uint64_t(ds.width)};
    for (const auto& [name, ch] : rec.channels) {
      const std::string vpath = day_file(day, name, ".vw4c");
      const std::string mpath = day_file(day, name, ".mask");
      io::write_f32_blob(dir + "/" + vpath, extents, ch.values.data());
      io::write_mask_blob(dir + "/" + mpath, extents, ch.mask.data());
      files.push_back({{"path", vpath},
                       {"kind", "values"},
                       {"day", day},
                       {"channel", name},
                       {"shape", extents},
                       {"crc32", io::blob_payload_crc(dir + "/" + vpath)}});
      files.push_back({{"path", mpath},
                       {"kind", "mask"},
                       {"day", day},
                       {"channel", name},
                       {"shape", extents},
                       {"crc32", io::blob_payload_crc(dir + "/" + mpath)}});
    }
  }
  for (const auto& [name, values] : ds.statics) {
    const std::string path = "static_" + name + ".vw4c";
    const std::vector<uint64_t> extents = {uint64_t(ds.height), uint64_t(ds.width)};
    io::write_f32_blob(dir + "/" + path, extents, values.data());
    files.push_back({{"path", path},
                     {"kind", "static"},
                     {"channel", name},
                     {"shape", extents},
                     {"crc32", io::blob_payload_crc(dir + "/" + path)}});
  }

  json ranges = json::object();
  for (const auto& [name, r] : ds.ranges) {
    ranges[name] = {{"lo", r.lo}, {"hi", r.hi}, {"fill", "zero"}};
  }

  const json manifest = {
      {"format", "vw4c-dataset"},
      {"version", 1},
      {"region_id", ds.region_id},
      {"height", ds.height},
      {"width", ds.width},
      {"frames_per_day", ds.frames_per_day},
      {"days", int(ds.days.size())},
      {"channels", ranges},
      {"files", files},
  };
  std::ofstream f(dir + "/manifest.json");
  if (!f) throw IoError("cannot write manifest: " + dir + "/manifest.json");
  f << manifest.dump(2) << "\n";
}

RegionDataset read_dataset(const std::string& dir) {
  std::ifstream f(dir + "/manifest.json");
  if (!f) throw IoError("cannot open manifest: " + dir + "/manifest.json");
  json manifest;
  try {
    f >> manifest;
  } catch (const json::exception& e) {
    throw IoError("malformed manifest in " + dir + ": " + e.what());
  }
  if (manifest.value("format", "") != "vw4c-dataset") {
    throw IoError("not a dataset manifest: " + dir);
  }
  if (manifest.value("version", 0) != 1) {
    throw IoError("dataset version mismatch in " + dir + ": file has " +
                  std::to_string(manifest.value("version", 0)) + ", expected 1");
  }

  RegionDataset ds;
  ds.region_id = manifest.at("region_id").get<std::string>();
  ds.height = manifest.at("height").get<int>();
  ds.width = manifest.at("width").get<int>();
  ds.frames_per_day = manifest.at("frames_per_day").get<int>();
  ds.days.resize(size_t(manifest.at("days").get<int>()));
  for (const auto& [name, r] : manifest.at("channels").items()) {
    ds.ranges[name] = {r.at("lo").get<double>(), r.at("hi").get<double>()};
  }

  const int64_t hw = int64_t(ds.height) * ds.width;
  for (const json& entry : manifest.at("files")) {
    const std::string path = dir + "/" + entry.at("path").get<std::string>();
    const std::string kind = entry.at("kind").get<std::string>();
    const std::vector<uint64_t> declared = entry.at("shape").get<std::vector<uint64_t>>();
    std::vector<uint64_t> extents;

    if (io::blob_payload_crc(path) != entry.at("crc32").get<uint32_t>()) {
      throw IoError("checksum mismatch vs manifest for " + path);
    }

    if (kind == "values" || kind == "mask") {
      const int day = entry.at("day").get<int>();
      const std::string channel = entry.at("channel").get<std::string>();
      if (day < 0 || day >= int(ds.days.size())) {
        throw IoError("manifest day index out of range for " + path);
      }
      ChannelFrames& ch = ds.days[size_t(day)].channels[channel];
      if (kind == "values") {
        ch.values = io::read_f32_blob(path, &extents);
      } else {
        ch.mask = io::read_mask_blob(path, &extents);
      }
      if (extents != declared) {
        throw IoError("declared shape does not match blob for " + path);
      }
      if (extents.size() != 3 || int64_t(extents[1]) != ds.height ||
          int64_t(extents[2]) != ds.width) {
        throw IoError("blob shape incompatible with grid size for " + path);
      }
      ds.days[size_t(day)].frames = int(extents[0]);
    } else if (kind == "static") {
      const std::string channel = entry.at("channel").get<std::string>();
      ds.statics[channel] = io::read_f32_blob(path, &extents);
      if (extents != declared) {
        throw IoError("declared shape does not match blob for " + path);
      }
      if (extents.size() != 2 || int64_t(extents[0]) * int64_t(extents[1]) != hw) {
        throw IoError("static blob shape incompatible with grid size for " + path);
      }
    } else {
      throw IoError("unknown file kind '" + kind + "' in manifest for " + path);
    }
  }

  // cross-check: every channel has matching values/mask sizes
  for (size_t day = 0; day < ds.days.size(); ++day) {
    for (const auto& [name, ch] : ds.days[day].channels) {
      if (ch.values.size() != ch.mask.size()) {
        throw IoError("values/mask size mismatch for day " + std::to_string(day) +
                      " channel " + name);
      }
    }
  }
  return ds;
}

}  // namespace vw4c::data
