#pragma once

#include <cstdint>
#include <random>

namespace edvcm {

// splitmix64; used to whiten seeds and derive independent substreams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d9b531e72faf67ULL;
  return z ^ (z >> 31);
}

// Deterministic substream seed for (seed, stream). Chains, replicates and
// truth generation each get their own stream index so results are identical
// for any worker count.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s = a ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return std::normal_distribution<double>{}(engine_); }
  double uniform() { return std::uniform_real_distribution<double>{}(engine_); }
  double uniform(double a, double b) {
    return std::uniform_real_distribution<double>{a, b}(engine_);
  }
  // inclusive bounds
  long uniform_int(long a, long b) {
    return std::uniform_int_distribution<long>{a, b}(engine_);
  }
  long poisson(double mean) {
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<long>{mean}(engine_);
  }
  long binomial(long n, double p) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    return std::binomial_distribution<long>{n, p}(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace edvcm
