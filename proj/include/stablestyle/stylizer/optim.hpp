#pragma once

#include <cstdint>
#include <vector>

#include "stablestyle/autodiff/tensor.hpp"
#include "stablestyle/flow/video.hpp"
#include "stablestyle/perceptual/losses.hpp"

namespace sst {

struct OptimConfig {
  double lambda_c = 1.0;
  double lambda_s = 1e-2;
  double lambda_t = 0.0;
  std::size_t iters = 250;
  double lr = 2e-2;
  std::uint64_t seed = 0;
};

struct OptimResult {
  Tensor image;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

// Projected Adam on the pixels, starting at `init` (the content image when
// undefined). Returns the lowest-loss iterate, so final_loss <= initial_loss.
OptimResult stylize_image_optim(const PerceptualObjective& objective, const Tensor& content,
                                const OptimConfig& config, const Tensor& init = {});

// Frame 1 as above; frame t >= 2 adds lambda_t * Lt(p_{t-1}, p_t) and starts
// from p_{t-1} warped into frame t (via the backward flow) when lambda_t > 0.
std::vector<OptimResult> stylize_video_optim(const PerceptualObjective& objective,
                                             const VideoSequence& sequence,
                                             const OptimConfig& config);

}  // namespace sst
