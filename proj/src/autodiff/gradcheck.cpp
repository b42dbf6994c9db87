#include "stablestyle/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stablestyle/autodiff/rng.hpp"
#include "stablestyle/errors.hpp"

namespace sst {

GradCheckResult check_gradients(const std::function<Tensor()>& loss, std::vector<Tensor> inputs,
                                const GradCheckOptions& options) {
  for (auto& t : inputs) {
    if (!t.is_leaf() || !t.requires_grad()) {
      throw InvalidArgument("check_gradients: inputs must be leaves that require grad");
    }
    t.zero_grad();
  }
  loss().backward();
  std::vector<std::vector<double>> analytic;
  for (auto& t : inputs) {
    analytic.push_back(t.grad());
    t.zero_grad();
  }

  Rng rng(options.seed);
  GradCheckResult result;
  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  NoGradGuard no_grad;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto values = inputs[k].mutable_values();
    std::vector<std::size_t> coords(values.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (options.max_coords_per_input && coords.size() > options.max_coords_per_input) {
      std::shuffle(coords.begin(), coords.end(), rng.engine());
      coords.resize(options.max_coords_per_input);
    }
    for (auto i : coords) {
      const double saved = values[i];
      values[i] = saved + options.step;
      const double plus = loss().item();
      values[i] = saved - options.step;
      const double minus = loss().item();
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double a = analytic[k][i];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
      result.max_abs_error = std::max(result.max_abs_error, std::abs(a - numeric));
    }
    result.coordinates += coords.size();
  }
  const double denom = std::max({std::sqrt(a2), std::sqrt(n2), 1e-12});
  result.relative_error = std::sqrt(diff2) / denom;
  return result;
}

}  // namespace sst
