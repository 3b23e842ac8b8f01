#pragma once

#include <cmath>
#include <vector>

#include "vw4c/rng.hpp"
#include "vw4c/tensor.hpp"

namespace vw4c::testutil {

inline Grid4D random_grid(int b, int c, int h, int w, RngStream& rng, double scale = 1.0) {
  Grid4D g(b, c, h, w);
  for (double& v : g.values()) v = scale * (2.0 * rng.uniform() - 1.0);
  return g;
}

inline void fill_random(ParamTensor& p, RngStream& rng, double scale = 1.0) {
  for (double& v : p.value) v = scale * (2.0 * rng.uniform() - 1.0);
}

inline double dot(const Grid4D& a, const Grid4D& b) {
  double acc = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) acc += a.data()[i] * b.data()[i];
  return acc;
}

inline double max_abs_diff(const Grid4D& a, const Grid4D& b) {
  double m = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
  }
  return m;
}

inline double max_rel_diff(const Grid4D& a, const Grid4D& b) {
  double m = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::fabs(a.data()[i]), std::fabs(b.data()[i]), 1e-12});
    m = std::max(m, std::fabs(a.data()[i] - b.data()[i]) / denom);
  }
  return m;
}

}  // namespace vw4c::testutil
