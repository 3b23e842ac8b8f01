#include "vw4c/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace vw4c {

std::string Shape4::str() const {
  std::ostringstream os;
  os << "(" << b << ", " << c << ", " << h << ", " << w << ")";
  return os.str();
}

bool Grid4D::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

ParamTensor::ParamTensor(std::vector<int> shape) : shape_(std::move(shape)) {
  int64_t n = 1;
  for (int d : shape_) {
    if (d <= 0) throw ConfigError("ParamTensor: non-positive dimension " + std::to_string(d));
    n *= d;
  }
  value.assign(size_t(n), 0.0);
  grad.assign(size_t(n), 0.0);
}

}  // namespace vw4c
