#pragma once

// Counter-based seeding: every (seed, stream, index) triple maps to an independent
// generator, so draws made for one shot never shift those of another.

#include <cstdint>
#include <random>

namespace spinsim {

std::uint64_t splitmix64(std::uint64_t x);

/// Hash of (seed, stream, index) used to key a per-shot generator.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal(double mean = 0.0, double sigma = 1.0) { return std::normal_distribution<double>(mean, sigma)(engine_); }
  bool bernoulli(double p) { return uniform() < p; }
  std::uint64_t binomial(std::uint64_t n, double p) {
    return std::binomial_distribution<std::uint64_t>(n, p)(engine_);
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace spinsim
