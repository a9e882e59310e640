#pragma once

#include <cstdint>

namespace snm {

// Deterministic counter-style generator built on the SplitMix64 finalizer.
// Streams fork with split() without touching the parent state, so parallel
// trial loops reproduce the serial results regardless of scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  // Uniform double in the open interval (0, 1), 53-bit resolution. Never
  // returns 0 or 1, so log() on the result is always finite.
  double next_unit() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Child stream derived from (current state, salt). The parent is unchanged,
  // so split(i) over a loop index yields independent reproducible streams.
  Rng split(std::uint64_t salt) const {
    return Rng(mix(mix(state_ ^ 0xA24BAED4963EE407ULL) +
                   salt * 0x9E3779B97F4A7C15ULL));
  }

  Rng split2(std::uint64_t a, std::uint64_t b) const {
    return split(a).split(b);
  }

  std::uint64_t state() const { return state_; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace snm
