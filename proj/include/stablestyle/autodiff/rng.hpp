#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "stablestyle/autodiff/tensor.hpp"

namespace sst {

// Seeded generator threaded explicitly through every initializer.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  std::uint64_t next() { return engine_(); }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  bool coin() { return (engine_() >> 63) != 0; }

  // Derives an independent stream, e.g. one per trial or per frame.
  Rng fork(std::uint64_t salt) { return Rng(engine_() ^ (salt * 0x9E3779B97F4A7C15ULL)); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

Tensor random_normal(Shape shape, Rng& rng, double stddev = 1.0, bool requires_grad = false);
Tensor random_uniform(Shape shape, Rng& rng, double lo = 0.0, double hi = 1.0,
                      bool requires_grad = false);

// Kaiming-style normal init for a [C_out, C_in, k, k] conv weight.
Tensor kaiming_conv_weight(std::size_t out_channels, std::size_t in_channels, std::size_t kernel,
                           Rng& rng, bool requires_grad = true);

}  // namespace sst
