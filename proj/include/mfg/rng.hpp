#pragma once

#include <cstdint>

#include "mfg/measures.hpp"

namespace mfg {

/// Counter-free splitmix64 stream. Streams for (replication, agent, time)
/// are derived by hashing the tuple into the seed, so any work unit can be
/// replayed in isolation and results do not depend on scheduling.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  /// Fixed documented mixing function: three splitmix64 finalizer rounds
  /// folding each tuple component into the state.
  static RngStream at(std::uint64_t master_seed, std::uint64_t replication,
                      std::uint64_t agent, std::uint64_t time, std::uint64_t purpose);

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Inverse-CDF draw from a finite distribution (fixed index order).
  std::size_t sample(const ProbVector& p) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
      acc += p[i];
      if (u < acc) return i;
    }
    return p.size() - 1;
  }

  std::size_t sample(const std::vector<double>& mass) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < mass.size(); ++i) {
      acc += mass[i];
      if (u < acc) return i;
    }
    return mass.size() - 1;
  }

 private:
  std::uint64_t state_;
};

}  // namespace mfg
