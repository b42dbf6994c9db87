#include "stablestyle/autodiff/adam.hpp"

#include <cmath>

#include "stablestyle/errors.hpp"

namespace sst {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& config) {
  if (!(config.lr > 0)) throw InvalidArgument("adam: learning rate must be positive");
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw InvalidArgument("adam: parameter, gradient and state sizes differ");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
  }
}

Adam::Adam(std::vector<Tensor> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  if (!(config_.lr > 0)) throw InvalidArgument("adam: learning rate must be positive");
  states_.reserve(params_.size());
  for (const auto& p : params_) {
    if (!p.is_leaf()) throw InvalidArgument("adam: parameters must be leaf tensors");
    states_.push_back(AdamState::zeros(p.numel()));
  }
}

void Adam::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto g = params_[i].grad();
    adam_step(params_[i].mutable_values(), g, states_[i], config_);
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace sst
