#pragma once

#include <cstdint>
#include <string_view>

namespace fairobnc {

// Stream derivation is part of the reproducibility contract: every random
// operation draws from its own substream keyed by (seed, tag[, index]), so
// adding a new operation never perturbs the streams of existing ones.
// Changing the generator or the derivation invalidates recorded outputs,
// hence the version string.
inline constexpr const char* kRngVersion = "xoshiro256pp-v1";

class Rng {
 public:
  Rng(uint64_t seed, std::string_view tag);
  Rng(uint64_t seed, std::string_view tag, uint64_t index);

  uint64_t next_u64();

  /// Uniform double in [0, 1).
  double next_double();

  /// Uniform integer in {0, ..., bound-1}; bound must be >= 1.
  uint64_t next_below(uint64_t bound);

  /// Uniform integer in [lo, hi], both inclusive.
  long long next_int(long long lo, long long hi);

  /// Standard normal deviate (Box-Muller).
  double next_normal();

  /// Derives a child seed from (seed, tag); used to key nested pipelines.
  static uint64_t derive(uint64_t seed, std::string_view tag);

 private:
  void init(uint64_t mixed);

  uint64_t state_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace fairobnc
