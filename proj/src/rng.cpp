#include "fairobnc/rng.hpp"

#include <cmath>
#include <numbers>

#include "fairobnc/errors.hpp"

namespace fairobnc {

namespace {

uint64_t splitmix64(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(uint64_t seed, std::string_view tag) {
  uint64_t x = seed ^ fnv1a(tag);
  init(splitmix64(x));
}

Rng::Rng(uint64_t seed, std::string_view tag, uint64_t index) {
  uint64_t x = seed ^ fnv1a(tag);
  x = splitmix64(x) ^ (index * 0xd6e8feb86659fd93ULL);
  init(splitmix64(x));
}

void Rng::init(uint64_t mixed) {
  for (auto& s : state_) s = splitmix64(mixed);
}

uint64_t Rng::next_u64() {
  const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t Rng::next_below(uint64_t bound) {
  if (bound == 0) throw ConfigError("Rng::next_below: bound must be >= 1");
  // Lemire's multiply-shift with rejection of the biased region.
  uint64_t x = next_u64();
  __uint128_t m = static_cast<__uint128_t>(x) * bound;
  uint64_t low = static_cast<uint64_t>(m);
  if (low < bound) {
    const uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      x = next_u64();
      m = static_cast<__uint128_t>(x) * bound;
      low = static_cast<uint64_t>(m);
    }
  }
  return static_cast<uint64_t>(m >> 64);
}

long long Rng::next_int(long long lo, long long hi) {
  if (lo > hi) throw ConfigError("Rng::next_int: empty range");
  const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
  return lo + static_cast<long long>(next_below(span));
}

double Rng::next_normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = 1.0 - next_double();  // (0, 1]
  const double u2 = next_double();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(theta);
  has_cached_normal_ = true;
  return r * std::cos(theta);
}

uint64_t Rng::derive(uint64_t seed, std::string_view tag) {
  uint64_t x = seed ^ fnv1a(tag);
  uint64_t mixed = splitmix64(x);
  return splitmix64(mixed);
}

}  // namespace fairobnc
