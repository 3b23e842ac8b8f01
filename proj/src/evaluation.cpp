#include "vw4c/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "vw4c/errors.hpp"

namespace vw4c::eval {

void ScoreAccumulator::add(const Grid4D& pred, const Grid4D& target, const Mask4D& mask) {
  const Shape4& s = pred.shape();
  if (!(target.shape() == s) || !(mask.shape() == s)) {
    throw ConfigError("score: pred/target/mask shapes must match");
  }
  if (s.c % loss::kNumVariables != 0) {
    throw ConfigError("score: channel count must be a multiple of 4");
  }
  const int leads = s.c / loss::kNumVariables;
  if (leads_ == 0) {
    leads_ = leads;
    term_sum_.assign(size_t(leads) * loss::kNumVariables, 0.0);
  } else if (leads_ != leads) {
    throw ConfigError("score: lead-time count changed between samples");
  }

  const int64_t plane = int64_t(s.h) * s.w;
  const double norm = 1.0 / (double(leads) * loss::kNumVariables);
  for (int n = 0; n < s.b; ++n) {
    for (int t = 0; t < leads; ++t) {
      for (int v = 0; v < loss::kNumVariables; ++v) {
        const int c = t * loss::kNumVariables + v;
        const size_t off = (size_t(n) * s.c + c) * plane;
        const double* pd = pred.data() + off;
        const double* td = target.data() + off;
        const uint8_t* md = mask.data() + off;
        int64_t valid = 0;
        double sq = 0.0;
        for (int64_t i = 0; i < plane; ++i) {
          if (!md[i]) continue;
          ++valid;
          const double d = pd[i] - td[i];
          sq += d * d;
        }
        valid_sum_[size_t(v)] += double(valid);
        pixel_sum_[size_t(v)] += double(plane);
        if (valid > 0) {
          term_sum_[size_t(t) * loss::kNumVariables + v] +=
              norm * weights_.weight(loss::TargetVariable(v)) / double(valid) * sq;
        }
      }
    }
    ++samples_;
  }
}

ScoreReport ScoreAccumulator::report() const {
  if (samples_ == 0) throw ConfigError("score: empty sample set");
  ScoreReport r;
  r.samples = samples_;
  r.per_leadtime.assign(size_t(leads_), 0.0);
  for (int t = 0; t < leads_; ++t) {
    for (int v = 0; v < loss::kNumVariables; ++v) {
      const double mean_term = term_sum_[size_t(t) * loss::kNumVariables + v] / double(samples_);
      r.aggregate += mean_term;
      r.per_variable[size_t(v)] += mean_term;
      r.per_leadtime[size_t(t)] += mean_term;
    }
  }
  for (int v = 0; v < loss::kNumVariables; ++v) {
    r.coverage[size_t(v)] = pixel_sum_[size_t(v)] > 0.0
                                ? valid_sum_[size_t(v)] / pixel_sum_[size_t(v)]
                                : 0.0;
  }
  return r;
}

ScoreReport score(const std::vector<Grid4D>& preds, const std::vector<Grid4D>& targets,
                  const std::vector<Mask4D>& masks, const loss::VariableWeights& weights) {
  if (preds.size() != targets.size() || preds.size() != masks.size()) {
    throw ConfigError("score: preds/targets/masks list lengths must match");
  }
  ScoreAccumulator acc(weights);
  for (size_t i = 0; i < preds.size(); ++i) acc.add(preds[i], targets[i], masks[i]);
  return acc.report();
}

// ---------------------------------------------------------------------------
// baselines
// ---------------------------------------------------------------------------

MeanBaseline MeanBaseline::fit(const std::vector<RegionDays>& train) {
  if (train.empty()) throw ConfigError("mean_baseline: empty training split");
  MeanBaseline mb;
  for (const RegionDays& rd : train) {
    const data::RegionDataset& ds = *rd.ds;
    const int hw = ds.height * ds.width;
    Maps maps;
    maps.height = ds.height;
    maps.width = ds.width;
    for (int v = 0; v < loss::kNumVariables; ++v) {
      const std::string& name = data::target_variables()[size_t(v)];
      std::vector<double> sum(size_t(hw), 0.0);
      std::vector<int64_t> count(size_t(hw), 0);
      double global_sum = 0.0;
      int64_t global_count = 0;
      for (int day : rd.days) {
        if (day < 0 || day >= int(ds.days.size())) {
          throw ConfigError("mean_baseline: day index out of range");
        }
        const data::DayRecord& rec = ds.days[size_t(day)];
        auto it = rec.channels.find(name);
        if (it == rec.channels.end()) {
          throw ConfigError("mean_baseline: dataset is missing channel " + name);
        }
        const data::ChannelFrames& ch = it->second;
        for (int t = 0; t < rec.frames; ++t) {
          for (int i = 0; i < hw; ++i) {
            const size_t k = size_t(t) * hw + i;
            if (!ch.mask[k]) continue;
            const double nv = ds.normalize(name, ch.values[k]);
            sum[size_t(i)] += nv;
            ++count[size_t(i)];
            global_sum += nv;
            ++global_count;
          }
        }
      }
      const double global_mean = global_count > 0 ? global_sum / double(global_count) : 0.0;
      maps.mean[size_t(v)].resize(size_t(hw));
      for (int i = 0; i < hw; ++i) {
        maps.mean[size_t(v)][size_t(i)] =
            count[size_t(i)] > 0 ? sum[size_t(i)] / double(count[size_t(i)]) : global_mean;
      }
    }
    mb.maps_[ds.region_id] = std::move(maps);
  }
  return mb;
}

Grid4D MeanBaseline::predict(const std::string& region_id) const {
  auto it = maps_.find(region_id);
  if (it == maps_.end()) {
    throw ConfigError("mean_baseline: no maps fitted for region " + region_id);
  }
  const Maps& maps = it->second;
  const int hw = maps.height * maps.width;
  Grid4D y(1, data::kLeadTimes * loss::kNumVariables, maps.height, maps.width);
  for (int t = 0; t < data::kLeadTimes; ++t) {
    for (int v = 0; v < loss::kNumVariables; ++v) {
      double* out = y.data() + size_t(t * loss::kNumVariables + v) * hw;
      const std::vector<double>& mean = maps.mean[size_t(v)];
      for (int i = 0; i < hw; ++i) out[i] = mean[size_t(i)];
    }
  }
  return y;
}

Grid4D persistence_baseline(const data::SampleWindow& window, const data::FeatureSpec& spec) {
  const std::vector<std::string> dynamic = spec.effective_dynamic();
  const Shape4& s = window.input.shape();
  const int hw = s.h * s.w;
  Grid4D y(1, data::kLeadTimes * loss::kNumVariables, s.h, s.w);
  for (int v = 0; v < loss::kNumVariables; ++v) {
    const std::string& name = data::target_variables()[size_t(v)];
    auto it = std::find(dynamic.begin(), dynamic.end(), name);
    if (it == dynamic.end()) {
      throw ConfigError("persistence_baseline: feature spec lacks target variable " + name);
    }
    const int feat = int(it - dynamic.begin());
    const int src_c = (data::kInputFrames - 1) * int(dynamic.size()) + feat;
    const double* src = window.input.data() + size_t(src_c) * hw;
    for (int t = 0; t < data::kLeadTimes; ++t) {
      double* out = y.data() + size_t(t * loss::kNumVariables + v) * hw;
      std::copy(src, src + hw, out);
    }
  }
  return y;
}

// ---------------------------------------------------------------------------
// report rendering
// ---------------------------------------------------------------------------

std::string render_report(const std::vector<NamedReport>& rows, ReportFormat format) {
  std::ostringstream os;
  os << std::setprecision(17);
  const auto& vars = data::target_variables();
  if (format == ReportFormat::csv) {
    os << "model,validation,test";
    for (const auto& v : vars) os << "," << v;
    os << "\n";
    for (const NamedReport& r : rows) {
      os << r.name << ",";
      if (r.validation) os << *r.validation;
      os << "," << r.test.aggregate;
      for (int v = 0; v < loss::kNumVariables; ++v) os << "," << r.test.per_variable[size_t(v)];
      os << "\n";
    }
    return os.str();
  }

  os << std::setprecision(6);
  os << std::left << std::setw(28) << "model" << std::right << std::setw(12) << "validation"
     << std::setw(12) << "test";
  for (const auto& v : vars) os << std::setw(21) << v;
  os << "\n";
  for (const NamedReport& r : rows) {
    os << std::left << std::setw(28) << r.name << std::right << std::setw(12);
    if (r.validation) {
      os << *r.validation;
    } else {
      os << "-";
    }
    os << std::setw(12) << r.test.aggregate;
    for (int v = 0; v < loss::kNumVariables; ++v) {
      os << std::setw(21) << r.test.per_variable[size_t(v)];
    }
    os << "\n";
  }
  os << "# metric: masked per-variable weighted MSE on normalized values, mean over samples\n";
  os << "# mean baseline: per-pixel temporal mean of training frames, constant over lead times\n";
  return os.str();
}

}  // namespace vw4c::eval
