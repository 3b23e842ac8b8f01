#pragma once

#include <cstdint>

namespace vw4c {

// Deterministic counter-based random stream (splitmix64 core). The state is
// fully described by (seed, position), so streams serialize to two integers
// and produce identical sequences on every platform.
class RngStream {
public:
  explicit RngStream(uint64_t seed) : seed_(seed), position_(0) {}

  static RngStream restore(uint64_t seed, uint64_t position) {
    RngStream r(seed);
    r.position_ = position;
    return r;
  }

  uint64_t seed() const { return seed_; }
  uint64_t position() const { return position_; }

  uint64_t next_u64();

  // Uniform in [0, 1), 53-bit resolution.
  double uniform();

  // Uniform integer in [0, n). n must be > 0.
  uint64_t uniform_int(uint64_t n);

  // Standard normal via Box-Muller; consumes exactly two raw draws.
  double normal();

  // Independent child stream seeded from this stream's output.
  RngStream fork() { return RngStream(next_u64()); }

private:
  uint64_t seed_;
  uint64_t position_;
};

}  // namespace vw4c
