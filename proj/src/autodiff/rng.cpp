#include "stablestyle/autodiff/rng.hpp"

#include <cmath>

namespace sst {

Tensor random_normal(Shape shape, Rng& rng, double stddev, bool requires_grad) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.normal(0.0, stddev);
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

Tensor random_uniform(Shape shape, Rng& rng, double lo, double hi, bool requires_grad) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

Tensor kaiming_conv_weight(std::size_t out_channels, std::size_t in_channels, std::size_t kernel,
                           Rng& rng, bool requires_grad) {
  const double fan_in = static_cast<double>(in_channels * kernel * kernel);
  return random_normal({out_channels, in_channels, kernel, kernel}, rng, std::sqrt(2.0 / fan_in),
                       requires_grad);
}

}  // namespace sst
