#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace polgrad {

/// splitmix64 finalizer; spreads low-entropy seeds across the full state space.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic 64-bit random stream.
///
/// Sampling is implemented on top of raw mt19937_64 draws rather than the
/// standard <random> distributions, whose algorithms are
/// implementation-defined; outputs here are identical across compilers.
/// Replica k of an experiment draws from `replica(base_seed, k)`, so every
/// replica is independent and individually reproducible.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(splitmix64(seed)) {}

  static RngStream replica(std::uint64_t base_seed, std::uint64_t k) {
    return RngStream(splitmix64(base_seed) ^ splitmix64(k * 0x9e3779b97f4a7c15ULL + 1));
  }

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  int uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    return static_cast<int>(uniform() * n);  // uniform() < 1, so result < n
  }

  /// Sample an index from an (unnormalized up to rounding) probability vector.
  int categorical(std::span<const double> probs) {
    if (probs.empty()) throw std::invalid_argument("categorical: empty probability vector");
    const double u = uniform();
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      cum += probs[i];
      if (u < cum) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size() - 1);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace polgrad
