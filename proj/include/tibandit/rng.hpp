#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace tibandit {

// splitmix64 finalizer, used to turn (seed, tag, index...) tuples into
// well-separated engine seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ a);
  s = splitmix64(s ^ b);
  s = splitmix64(s ^ c);
  return s;
}

// Seeded stream of uniform and Gaussian draws. Every normal() consumes
// exactly two engine words and keeps no cached state, so a stream's k-th
// draw does not depend on how calls are interleaved with other streams.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (cosine branch only).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tibandit
