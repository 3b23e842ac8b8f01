#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vw4c/errors.hpp"

namespace vw4c {

struct Shape4 {
  int b = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  int64_t count() const { return int64_t(b) * c * h * w; }
  bool operator==(const Shape4& o) const = default;
  std::string str() const;
};

// Rank-4 numeric array in row-major (batch, channel, row, column) order.
class Grid4D {
public:
  Grid4D() = default;
  Grid4D(int b, int c, int h, int w, double fill = 0.0)
      : shape_{b, c, h, w}, values_(size_t(shape_.count()), fill) {}

  static Grid4D zeros_like(const Grid4D& other) {
    const Shape4& s = other.shape_;
    return Grid4D(s.b, s.c, s.h, s.w);
  }

  const Shape4& shape() const { return shape_; }
  int64_t size() const { return shape_.count(); }

  double& at(int b, int c, int y, int x) { return values_[index(b, c, y, x)]; }
  double at(int b, int c, int y, int x) const { return values_[index(b, c, y, x)]; }

  size_t index(int b, int c, int y, int x) const {
    return ((size_t(b) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool all_finite() const;

private:
  Shape4 shape_;
  std::vector<double> values_;
};

// Boolean companion of Grid4D (1 = set). Used for validity masks.
class Mask4D {
public:
  Mask4D() = default;
  Mask4D(int b, int c, int h, int w, uint8_t fill = 0)
      : shape_{b, c, h, w}, values_(size_t(shape_.count()), fill) {}

  const Shape4& shape() const { return shape_; }
  int64_t size() const { return shape_.count(); }

  uint8_t& at(int b, int c, int y, int x) { return values_[index(b, c, y, x)]; }
  uint8_t at(int b, int c, int y, int x) const { return values_[index(b, c, y, x)]; }

  size_t index(int b, int c, int y, int x) const {
    return ((size_t(b) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }

  uint8_t* data() { return values_.data(); }
  const uint8_t* data() const { return values_.data(); }
  std::vector<uint8_t>& values() { return values_; }
  const std::vector<uint8_t>& values() const { return values_; }

private:
  Shape4 shape_;
  std::vector<uint8_t> values_;
};

// A learnable buffer: values plus a same-shape gradient accumulator.
class ParamTensor {
public:
  ParamTensor() = default;
  explicit ParamTensor(std::vector<int> shape);

  const std::vector<int>& shape() const { return shape_; }
  int64_t count() const { return int64_t(value.size()); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

  std::vector<double> value;
  std::vector<double> grad;

private:
  std::vector<int> shape_;
};

}  // namespace vw4c
