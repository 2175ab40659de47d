#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace sentinel {

/// Seeded pseudo-random generator with named streams. Identical
/// (seed, stream) pairs reproduce identical draw sequences; distinct
/// streams are decorrelated by a splitmix64 hash of the pair.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1).
  double uniform();

  /// Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi);

  /// One sample from N(mu, sigma^2). sigma == 0 returns mu exactly.
  double gaussian(double mu, double sigma);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(0, static_cast<int>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace sentinel
