#include "stablestyle/stylizer/optim.hpp"

#include <algorithm>
#include <functional>

#include "stablestyle/autodiff/adam.hpp"
#include "stablestyle/autodiff/ops.hpp"
#include "stablestyle/autodiff/rng.hpp"
#include "stablestyle/errors.hpp"
#include "stablestyle/flow/flow.hpp"

namespace sst {

namespace {

using ExtraTerm = std::function<Tensor(const Tensor& p)>;

OptimResult optimize_pixels(const PerceptualObjective& objective, const Tensor& content,
                            const OptimConfig& config, const Tensor& init, const ExtraTerm& extra) {
  if (config.iters < 1) throw InvalidArgument("stylize_image_optim: iters must be >= 1");
  const auto content_feats = objective.content_features(content);
  auto loss_of = [&](const Tensor& p) {
    Tensor l = objective.image_loss(p, content_feats, config.lambda_c, config.lambda_s);
    if (extra) l = ops::add(l, extra(p));
    return l;
  };

  Tensor pixels = (init.defined() ? init : content).clone(true);
  AdamState state = AdamState::zeros(pixels.numel());
  const AdamConfig adam{config.lr};

  OptimResult result;
  Tensor best = pixels.detach();
  double best_loss = 0.0;
  for (std::size_t it = 0; it <= config.iters; ++it) {
    pixels.zero_grad();
    Tensor loss = loss_of(pixels);
    const double value = loss.item();
    if (it == 0) {
      result.initial_loss = value;
      best_loss = value;
    } else if (value < best_loss) {
      best_loss = value;
      best = pixels.detach();
    }
    if (it == config.iters) break;
    loss.backward();
    const auto g = pixels.grad();
    auto px = pixels.mutable_values();
    adam_step(px, g, state, adam);
    for (auto& v : px) v = std::clamp(v, 0.0, 1.0);
  }
  result.image = best;
  result.final_loss = best_loss;
  return result;
}

}  // namespace

OptimResult stylize_image_optim(const PerceptualObjective& objective, const Tensor& content,
                                const OptimConfig& config, const Tensor& init) {
  return optimize_pixels(objective, content, config, init, {});
}

std::vector<OptimResult> stylize_video_optim(const PerceptualObjective& objective,
                                             const VideoSequence& sequence,
                                             const OptimConfig& config) {
  sequence.validate();
  if (!sequence.has_flows()) throw InvalidArgument("stylize_video_optim: flows and masks are required");
  std::vector<OptimResult> out;
  out.push_back(optimize_pixels(objective, sequence.frames[0], config, {}, {}));
  for (std::size_t t = 1; t < sequence.length(); ++t) {
    const Tensor prev = out.back().image;
    if (config.lambda_t <= 0) {
      out.push_back(optimize_pixels(objective, sequence.frames[t], config, {}, {}));
      continue;
    }
    Tensor init = prev;
    if (sequence.backward_flows.size() == sequence.flows.size()) {
      NoGradGuard no_grad;
      init = bilinear_warp(prev, sequence.backward_flows[t - 1]).detach();
    }
    const FlowField& flow = sequence.flows[t - 1];
    const OcclusionMask& mask = sequence.masks[t - 1];
    const double lt = config.lambda_t;
    out.push_back(optimize_pixels(objective, sequence.frames[t], config, init, [&, lt](const Tensor& p) {
      return ops::scale(temporal_loss(prev, p, flow, mask), lt);
    }));
  }
  return out;
}

}  // namespace sst
