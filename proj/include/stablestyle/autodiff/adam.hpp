#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stablestyle/autodiff/tensor.hpp"

namespace sst {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  static AdamState zeros(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0}; }
};

// One bias-corrected Adam update applied in place. Throws InvalidArgument when
// lr <= 0 or the buffers disagree in length.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& config);

// Adam over a fixed list of leaf tensors, reading their accumulated grads.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig config);

  void step();
  void zero_grad();
  const AdamConfig& config() const { return config_; }
  std::uint64_t steps() const { return states_.empty() ? 0 : states_.front().step; }

 private:
  std::vector<Tensor> params_;
  std::vector<AdamState> states_;
  AdamConfig config_;
};

}  // namespace sst
