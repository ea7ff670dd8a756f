#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace exset {

// splitmix64 finalizer; good avalanche, cheap enough to use as a
// counter-based generator for per-(node, particle) uniforms.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives an independent stream seed from a master seed and a stage name.
// All randomness in the artifact flows from one seed through these names.
inline std::uint64_t substream(std::uint64_t seed, std::string_view name) {
  return hash_combine(mix64(seed), fnv1a64(name));
}

// Uniform in the open interval (0,1); never returns 0 or 1 so that
// inverse-CDF transforms stay finite.
inline double to_unit_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Counter-based uniform: a fixed (stream, key) pair always yields the same
// value regardless of evaluation order, which makes particle extensions
// schedule-independent and invariant under reordering of untouched variables.
inline double counter_uniform(std::uint64_t stream, std::uint64_t key) {
  return to_unit_open(mix64(stream ^ mix64(key)));
}

// Stateful stream for bulk sampling (simulation, MCMC, verification draws).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(mix64(seed)) {}
  RngStream(std::uint64_t seed, std::string_view name)
      : engine_(substream(seed, name)) {}

  double uniform() { return to_unit_open(engine_()); }
  std::uint64_t bits() { return engine_(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) %
           n;
  }

  double normal();  // inverse-CDF transform; defined in normal.cpp

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace exset
