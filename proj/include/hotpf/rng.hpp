#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace hotpf::rng {

// SplitMix64 step. Used to mix (seed, tag, index) tuples into independent
// engine seeds so that per-bus / per-purpose streams never overlap.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(splitmix64(seed) ^ tag);
}

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t tag, std::uint64_t idx) {
  return splitmix64(mix(seed, tag) ^ splitmix64(idx));
}

// Stream tags. Each consumer owns one tag so streams stay independent
// for a fixed user seed.
inline constexpr std::uint64_t kTagLoadP = 0x4c4f41445f505f30ULL;
inline constexpr std::uint64_t kTagPowerFactor = 0x50465f53545245ULL;
inline constexpr std::uint64_t kTagXavier = 0x584156494552ULL;
inline constexpr std::uint64_t kTagShuffle = 0x53485546464cULL;

class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1), 53-bit resolution. Bit-stable for a given engine
  // state (no std::*_distribution, those vary across standard libraries).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform in (-1, 1) excluding exact 0 only with measure zero.
  double uniform_sym() { return 2.0 * uniform() - 1.0; }

  // Marsaglia polar method; the spare deviate is discarded so each call
  // is a pure function of the engine state.
  double normal(double mean, double stddev) {
    double u, v, s;
    do {
      u = uniform_sym();
      v = uniform_sym();
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    return mean + stddev * (u * std::sqrt(-2.0 * std::log(s) / s));
  }

  // Rejection sampling from N(mean, stddev^2) restricted to [lo, hi].
  double truncated_normal(double mean, double stddev, double lo, double hi) {
    for (;;) {
      double x = normal(mean, stddev);
      if (x >= lo && x <= hi) return x;
    }
  }

  // Unbiased-enough bounded draw (Lemire multiply-shift); bias is O(2^-64).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// Fisher-Yates with our own bounded draws; std::shuffle is
// implementation-defined and would break cross-platform reproducibility.
template <typename T>
void shuffle(std::vector<T>& v, Stream& s) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(s.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace hotpf::rng
