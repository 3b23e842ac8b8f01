#include "vw4c/rng.hpp"

#include <cmath>

#include "vw4c/errors.hpp"

namespace vw4c {

namespace {
constexpr uint64_t kGamma = 0x9E3779B97F4A7C15ull;

uint64_t mix(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}
}  // namespace

uint64_t RngStream::next_u64() {
  ++position_;
  return mix(seed_ + position_ * kGamma);
}

double RngStream::uniform() {
  return double(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t RngStream::uniform_int(uint64_t n) {
  if (n == 0) throw ConfigError("uniform_int: n must be positive");
  return uint64_t((unsigned __int128)(next_u64()) * n >> 64);
}

double RngStream::normal() {
  double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace vw4c
