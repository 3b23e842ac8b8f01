#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vw4c/tensor.hpp"

// Weather4cast-shaped samples: 4 input frames of stacked channels plus
// statics, 32 target frames of 4 variables, per-pixel validity masks, a
// deterministic synthetic generator, and a checksummed on-disk format.
namespace vw4c::data {

constexpr int kInputFrames = 4;
constexpr int kLeadTimes = 32;
constexpr int kWindowFrames = kInputFrames + kLeadTimes;

// Target variables in channel order; target channel = lead*4 + variable.
const std::array<std::string, 4>& target_variables();

struct ChannelRange {
  double lo = 0.0;
  double hi = 1.0;
};

// Which channels feed the model, and how gaps are treated.
struct FeatureSpec {
  std::vector<std::string> dynamic = {
      "temperature", "ctth_pres",           "crr_intensity", "crr_accum",
      "asii_turb_trop_prob", "cma", "ct",   "ctth_tempe_mask",
  };
  std::vector<std::string> statics = {"altitude", "latitude", "longitude"};
  bool use_ctth_alt = false;
  bool interpolate_temperature = false;
  bool interpolate_ctth_pres = false;

  // dynamic list with ctth_alt appended when enabled
  std::vector<std::string> effective_dynamic() const;
  int input_channels() const;
  void validate() const;
};

// One channel over one day: frames*H*W values with a validity mask.
struct ChannelFrames {
  std::vector<float> values;
  std::vector<uint8_t> mask;  // 1 = valid
};

struct DayRecord {
  int frames = 0;
  std::map<std::string, ChannelFrames> channels;
};

struct RegionDataset {
  std::string region_id;
  int height = 0;
  int width = 0;
  int frames_per_day = 96;
  std::vector<DayRecord> days;
  std::map<std::string, std::vector<float>> statics;  // H*W each
  std::map<std::string, ChannelRange> ranges;         // per channel, incl. statics

  double normalize(const std::string& channel, double v) const;
  double denormalize(const std::string& channel, double v) const;
  const ChannelRange& range(const std::string& channel) const;
};

struct WindowKey {
  int day = 0;
  int start = 0;
};

struct SampleWindow {
  Grid4D input;        // 1 x input_channels x H x W, normalized, zero-filled
  Grid4D target;       // 1 x 128 x H x W, normalized, zero-filled
  Mask4D target_mask;  // 1 = pixel was measured
  std::string region;
  int day = 0;
  int start = 0;
};

// values' = values where mask, 0 elsewhere.
std::vector<double> zero_fill(const std::vector<double>& values,
                              const std::vector<uint8_t>& mask);

// Fills interior gaps of each pixel's time series by linear interpolation
// between the nearest valid neighbors. Leading/trailing gaps stay missing;
// valid samples are untouched.
ChannelFrames interpolate_temporal(const ChannelFrames& series, int frames, int pixels);

Grid4D assemble_input(const RegionDataset& ds, int day, int start, const FeatureSpec& spec);
std::pair<Grid4D, Mask4D> extract_targets(const RegionDataset& ds, int day, int start);
SampleWindow make_window(const RegionDataset& ds, int day, int start, const FeatureSpec& spec);

// All 36-frame windows that fit within single days, deterministic order.
std::vector<WindowKey> window_split(const RegionDataset& ds, int stride = 1);

struct SynthConfig {
  std::string region_id = "R1";
  int size = 32;
  int days = 5;
  int frames_per_day = 96;
  double missing_rate = 0.05;
};

RegionDataset synth_generate(const SynthConfig& cfg, uint64_t seed);

void write_dataset(const RegionDataset& ds, const std::string& dir);
RegionDataset read_dataset(const std::string& dir);

}  // namespace vw4c::data
