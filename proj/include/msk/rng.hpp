#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace msk::rng {

// Counter-based generator built on splitmix64. Every draw is a pure function
// of (key, counter), which buys two things the experiment harness relies on:
// bit-identical streams regardless of platform or thread schedule, and O(1)
// random access so huge weight matrices can be regenerated blockwise instead
// of stored.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Combine a seed with an arbitrary tag list into a stream key.
inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2)));
}

inline std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(h);
}

/// Uniform in [0,1) from (key, counter).
inline double uniform_at(std::uint64_t key, std::uint64_t counter) {
  return static_cast<double>(splitmix64(mix(key, counter)) >> 11) * 0x1.0p-53;
}

/// Standard normal from (key, counter) via Box-Muller; one normal per index.
inline double normal_at(std::uint64_t key, std::uint64_t counter) {
  double u1 = uniform_at(key, 2 * counter);
  double u2 = uniform_at(key, 2 * counter + 1);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

/// Sequential convenience wrapper over the counter-based core.
class Stream {
 public:
  explicit Stream(std::uint64_t key) : key_(key) {}

  double uniform() { return uniform_at(key_, counter_++); }
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }
  std::uint64_t next_u64() { return splitmix64(mix(key_, counter_++)); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace msk::rng
