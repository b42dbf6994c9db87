#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stablestyle/autodiff/tensor.hpp"
#include "stablestyle/flow/video.hpp"
#include "stablestyle/io/weights.hpp"
#include "stablestyle/perceptual/losses.hpp"

namespace sst {

struct StylizerArch {
  std::size_t width1 = 16;  // after the first downsampling conv
  std::size_t width2 = 32;  // after the second; residual blocks run at this width
  std::size_t residual_blocks = 3;
};

struct LossWeights {
  double content = 1.0;
  double style = 1e-2;
  double temporal = 100.0;
};

struct ConvLayer {
  Tensor weight;  // [C_out, C_in, 3, 3]
  Tensor bias;    // [C_out]
};

// f_W(p_prev, c_t): concat -> 2 stride-2 convs -> residual blocks ->
// 2 x (nearest upsample + conv) -> output conv -> sigmoid. Instance norm and
// ReLU follow every conv except the output conv.
class RecurrentStylizer {
 public:
  static RecurrentStylizer create(const StylizerArch& arch, std::uint64_t seed);
  static RecurrentStylizer from_weights(const NamedTensors& tensors);
  NamedTensors to_weights() const;

  Tensor forward_step(const Tensor& p_prev, const Tensor& content) const;

  // Trainable leaves in a fixed order.
  std::vector<Tensor> parameters() const;
  RecurrentStylizer clone() const;

  const StylizerArch& arch() const { return arch_; }
  const LossWeights& loss_weights() const { return lambdas_; }
  void set_loss_weights(const LossWeights& w) { lambdas_ = w; }
  std::uint64_t train_steps() const { return train_steps_; }
  void add_train_steps(std::uint64_t n) { train_steps_ += n; }

  ConvLayer& output_conv() { return out_; }
  std::uint64_t fingerprint() const;

 private:
  StylizerArch arch_;
  LossWeights lambdas_;
  std::uint64_t train_steps_ = 0;
  ConvLayer down1_, down2_;
  std::vector<ConvLayer> residual_;  // two convs per block
  ConvLayer up1_, up2_, out_;
};

// How p_prev is chosen at each step.
enum class StylizeMode {
  Recurrent,    // p_0 = c_1, then p_{t-1}
  Independent,  // p_prev = c_t for every frame (per-frame baseline)
};

StylizeMode parse_stylize_mode(const std::string& name);

// sum_t lambda_c Lc(p_t, c_t) + lambda_s Ls(p_t, s), plus lambda_t Lt(p_{t-1}, p_t)
// for t >= 2. Differentiable through the whole unroll.
Tensor rollout_loss(const RecurrentStylizer& model, const PerceptualObjective& objective,
                    const VideoSequence& sequence, const LossWeights& weights,
                    StylizeMode mode = StylizeMode::Recurrent);

std::vector<Tensor> stylize_video(const RecurrentStylizer& model, const VideoSequence& sequence,
                                  StylizeMode mode = StylizeMode::Recurrent);

enum class TrainPhase { ImagePretrain, VideoFinetune };

TrainPhase parse_train_phase(const std::string& name);

struct TrainConfig {
  TrainPhase phase = TrainPhase::ImagePretrain;
  std::size_t epochs = 10;
  std::size_t bptt_steps = 4;
  double lr = 1e-3;
  bool flip_horizontal = true;
  bool flip_vertical = true;
  std::uint64_t seed = 0;
  LossWeights lambdas;

  void validate() const;
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean sample loss per epoch
  std::uint64_t steps = 0;
};

// Single-sample Adam steps. The image phase treats every frame as its own
// length-1 sequence with lambda_t = 0; the video phase cuts sequences into
// windows of bptt_steps frames. lr == 0 computes losses without updating.
TrainResult train(RecurrentStylizer& model, const PerceptualObjective& objective,
                  const std::vector<VideoSequence>& dataset, const TrainConfig& config,
                  const std::function<void(std::size_t epoch, double loss)>& on_epoch = {});

// Horizontal/vertical flip of frames, flows (with sign change) and masks.
VideoSequence flip_sequence(const VideoSequence& seq, bool horizontal, bool vertical);

}  // namespace sst
