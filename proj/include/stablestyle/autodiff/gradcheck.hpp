#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "stablestyle/autodiff/tensor.hpp"

namespace sst {

struct GradCheckOptions {
  // Small enough that central differences rarely straddle a ReLU kink.
  double step = 1e-6;
  // Checks at most this many coordinates per input (0 = all), chosen with seed.
  std::size_t max_coords_per_input = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  // ||analytic - numeric|| / max(||analytic||, ||numeric||, 1e-12) over the
  // checked coordinates of all inputs taken as one vector. Inputs whose true
  // gradient is zero (a bias feeding instance norm) then cannot dominate.
  double relative_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t coordinates = 0;
};

// Compares reverse-mode gradients of `loss` with central finite differences.
// `inputs` must be leaves with requires_grad; their grads are left cleared.
GradCheckResult check_gradients(const std::function<Tensor()>& loss, std::vector<Tensor> inputs,
                                const GradCheckOptions& options = {});

}  // namespace sst
