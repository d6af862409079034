#pragma once

#include <cstdint>

namespace flamegan::nn {

/// Counter-based generator: draw i is a pure function of (key, i), so two
/// states with equal key and counter produce identical sequences.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : key_(mix(seed ^ 0x6a09e667f3bcc908ULL)) {}

  std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Independent child stream; does not advance this generator.
  Rng fork(std::uint64_t stream) const {
    Rng child(0);
    child.key_ = mix(key_ ^ mix(stream + 0xbb67ae8584caa73bULL));
    return child;
  }

  std::uint64_t counter() const { return counter_; }
  bool operator==(const Rng&) const = default;

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace flamegan::nn
