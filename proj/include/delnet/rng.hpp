#pragma once

// Deterministic per-stream random numbers.
//
// Every stochastic object in the library (an edge clock, a node clock, a
// problem generator) draws from its own stream, keyed by (seed, stream key).
// Adding or removing one stream never perturbs the draws of another, and the
// same (seed, key) pair yields the same sequence on every platform: both the
// generator and the distributions below are written out explicitly instead of
// relying on implementation-defined <random> distributions.

#include <cmath>
#include <cstdint>

namespace delnet {

// SplitMix64 finalizer; bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t key)
      : state_(mix64(seed + 0x9e3779b97f4a7c15ULL) ^
               mix64(key + 0xd1b54a32d192ed03ULL)) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // Uniform in the open interval (0, 1); never returns an exact endpoint.
  double next_unit() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Exponential with the given rate; strictly positive.
  double next_exponential(double rate) {
    return -std::log(next_unit()) / rate;
  }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double next_normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  // Uniform integer in {0, ..., n-1}; n >= 1.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<__uint128_t>(next_u64()) * n) >> 64);
  }

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

// Stream keys used across the library. Keeping the catalogue in one place
// guarantees that unrelated components never collide on a key.
enum class StreamKind : std::uint64_t {
  comm_clock = 1,   // one per edge
  comp_clock = 2,   // one per node (local computations)
  node_clock = 3,   // one per node (ping-based protocol)
  initial_state = 4,
  problem = 5,
  delays = 6,
  graph = 7,
  choice = 8,  // neighbor selection in the ping protocol
};

inline std::uint64_t stream_key(StreamKind kind, std::uint64_t index) {
  return (static_cast<std::uint64_t>(kind) << 40) | index;
}

inline RngStream make_stream(std::uint64_t seed, StreamKind kind,
                             std::uint64_t index) {
  return RngStream(seed, stream_key(kind, index));
}

}  // namespace delnet
