#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace bnkit {

/// Seeded generator shared by sampling, initialization and synthetic models.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }
  bool bernoulli(double p) { return uniform() < p; }

  /// Index drawn proportionally to `weights` (need not be normalized).
  std::size_t categorical(std::span<const double> weights);

  /// Draw from a symmetric Dirichlet(alpha) over `k` categories.
  std::vector<double> dirichlet(std::size_t k, double alpha = 1.0);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bnkit
