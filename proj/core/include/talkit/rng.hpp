#pragma once

#include <cmath>
#include <cstdint>

namespace talkit {

// Deterministic pseudo-random stream. All draws are derived from raw 64-bit
// engine output with fixed arithmetic, so sequences are reproducible across
// platforms and standard-library versions (std::*_distribution is not).
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed ^ kInitMix) {
    // warm up so nearby seeds decorrelate quickly
    next_u64();
    next_u64();
  }

  // splitmix64 step
  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [lo, hi] inclusive
  int64_t int_in(int64_t lo, int64_t hi) {
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    // multiply-shift bounded draw; bias < 2^-64, irrelevant here and fully
    // deterministic
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * span;
    return lo + static_cast<int64_t>(m >> 64);
  }

  // standard normal via Box-Muller; second value of each pair is cached
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    // avoid log(0)
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * kPi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Derive an independent stream seed from (seed, stream index). Used to give
  // every video / parameter block its own stream so that parallel generation
  // cannot change results.
  static uint64_t derive(uint64_t seed, uint64_t stream) {
    uint64_t z = seed ^ (0x9e3779b97f4a7c15ULL + (stream << 1));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr uint64_t kInitMix = 0x8f1bbcdc2f9a3c0dULL;
  static constexpr double kPi = 3.14159265358979323846;
  uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace talkit
