#include "stablestyle/stylizer/stylizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "stablestyle/autodiff/adam.hpp"
#include "stablestyle/autodiff/ops.hpp"
#include "stablestyle/autodiff/rng.hpp"
#include "stablestyle/errors.hpp"

namespace sst {

namespace {

constexpr double kNormEps = 1e-5;

ConvLayer make_conv(std::size_t in, std::size_t out, Rng& rng) {
  return {kaiming_conv_weight(out, in, 3, rng, true), Tensor::zeros({out}, true)};
}

Tensor conv_in_relu(const Tensor& x, const ConvLayer& c, std::size_t stride) {
  return ops::relu(ops::instance_norm(ops::conv2d(x, c.weight, c.bias, stride, 1), kNormEps));
}

ConvLayer load_conv(const NamedTensors& t, const std::string& name) {
  return {find_tensor(t, name + ".weight").clone(true), find_tensor(t, name + ".bias").clone(true)};
}

}  // namespace

RecurrentStylizer RecurrentStylizer::create(const StylizerArch& arch, std::uint64_t seed) {
  if (arch.width1 == 0 || arch.width2 == 0) throw InvalidArgument("stylizer: widths must be positive");
  Rng rng(seed);
  RecurrentStylizer m;
  m.arch_ = arch;
  m.down1_ = make_conv(6, arch.width1, rng);
  m.down2_ = make_conv(arch.width1, arch.width2, rng);
  for (std::size_t b = 0; b < 2 * arch.residual_blocks; ++b) m.residual_.push_back(make_conv(arch.width2, arch.width2, rng));
  m.up1_ = make_conv(arch.width2, arch.width1, rng);
  m.up2_ = make_conv(arch.width1, arch.width1, rng);
  m.out_ = make_conv(arch.width1, 3, rng);
  return m;
}

RecurrentStylizer RecurrentStylizer::from_weights(const NamedTensors& t) {
  RecurrentStylizer m;
  m.down1_ = load_conv(t, "down1");
  m.down2_ = load_conv(t, "down2");
  m.arch_.width1 = m.down1_.weight.dim(0);
  m.arch_.width2 = m.down2_.weight.dim(0);
  std::size_t blocks = 0;
  while (has_tensor(t, "res" + std::to_string(blocks + 1) + ".conv1.weight")) ++blocks;
  m.arch_.residual_blocks = blocks;
  for (std::size_t b = 1; b <= blocks; ++b) {
    m.residual_.push_back(load_conv(t, "res" + std::to_string(b) + ".conv1"));
    m.residual_.push_back(load_conv(t, "res" + std::to_string(b) + ".conv2"));
  }
  m.up1_ = load_conv(t, "up1");
  m.up2_ = load_conv(t, "up2");
  m.out_ = load_conv(t, "out");
  if (m.down1_.weight.dim(1) != 6 || m.out_.weight.dim(0) != 3) {
    throw FormatError("stylizer checkpoint: expected 6 input and 3 output channels");
  }
  if (has_tensor(t, "meta.lambdas")) {
    auto l = find_tensor(t, "meta.lambdas").values();
    if (l.size() != 3) throw FormatError("stylizer checkpoint: meta.lambdas must hold 3 values");
    m.lambdas_ = {l[0], l[1], l[2]};
  }
  if (has_tensor(t, "meta.train_steps")) {
    m.train_steps_ = static_cast<std::uint64_t>(find_tensor(t, "meta.train_steps").item());
  }
  // Shape consistency is checked by running a tiny forward pass.
  NoGradGuard no_grad;
  const Tensor probe = Tensor::zeros({3, 4, 4});
  m.forward_step(probe, probe);
  return m;
}

NamedTensors RecurrentStylizer::to_weights() const {
  NamedTensors out;
  auto put = [&](const std::string& name, const ConvLayer& c) {
    out.push_back({name + ".weight", c.weight});
    out.push_back({name + ".bias", c.bias});
  };
  put("down1", down1_);
  put("down2", down2_);
  for (std::size_t b = 0; b < arch_.residual_blocks; ++b) {
    put("res" + std::to_string(b + 1) + ".conv1", residual_[2 * b]);
    put("res" + std::to_string(b + 1) + ".conv2", residual_[2 * b + 1]);
  }
  put("up1", up1_);
  put("up2", up2_);
  put("out", out_);
  out.push_back({"meta.lambdas", Tensor({3}, {lambdas_.content, lambdas_.style, lambdas_.temporal})});
  out.push_back({"meta.train_steps", Tensor::scalar(static_cast<double>(train_steps_))});
  return out;
}

Tensor RecurrentStylizer::forward_step(const Tensor& p_prev, const Tensor& content) const {
  if (p_prev.shape() != content.shape() || content.rank() != 3 || content.dim(0) != 3) {
    throw InvalidArgument("forward_step: p_prev " + shape_str(p_prev.shape()) + " and content " +
                          shape_str(content.shape()) + " must both be [3,H,W]");
  }
  if (content.dim(1) % 4 != 0 || content.dim(2) % 4 != 0) {
    throw InvalidArgument("forward_step: H and W must be divisible by 4, got " +
                          shape_str(content.shape()));
  }
  Tensor x = ops::concat_channels(p_prev, content);
  x = conv_in_relu(x, down1_, 2);
  x = conv_in_relu(x, down2_, 2);
  for (std::size_t b = 0; b < arch_.residual_blocks; ++b) {
    const auto& c1 = residual_[2 * b];
    const auto& c2 = residual_[2 * b + 1];
    x = ops::residual_block(x, {c1.weight, c1.bias, c2.weight, c2.bias}, kNormEps);
  }
  x = conv_in_relu(ops::upsample_nearest2x(x), up1_, 1);
  x = conv_in_relu(ops::upsample_nearest2x(x), up2_, 1);
  return ops::sigmoid(ops::conv2d(x, out_.weight, out_.bias, 1, 1));
}

std::vector<Tensor> RecurrentStylizer::parameters() const {
  std::vector<Tensor> p;
  auto put = [&](const ConvLayer& c) {
    p.push_back(c.weight);
    p.push_back(c.bias);
  };
  put(down1_);
  put(down2_);
  for (const auto& r : residual_) put(r);
  put(up1_);
  put(up2_);
  put(out_);
  return p;
}

RecurrentStylizer RecurrentStylizer::clone() const {
  return from_weights(to_weights());
}

std::uint64_t RecurrentStylizer::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& t : parameters()) {
    for (double v : t.values()) {
      unsigned char b[sizeof(double)];
      std::memcpy(b, &v, sizeof(double));
      for (auto c : b) h = (h ^ c) * 1099511628211ULL;
    }
  }
  return h;
}

StylizeMode parse_stylize_mode(const std::string& name) {
  if (name == "recurrent") return StylizeMode::Recurrent;
  if (name == "independent") return StylizeMode::Independent;
  throw InvalidArgument("unknown stylize mode '" + name + "' (expected recurrent or independent)");
}

TrainPhase parse_train_phase(const std::string& name) {
  if (name == "image" || name == "image-pretrain") return TrainPhase::ImagePretrain;
  if (name == "video" || name == "video-finetune") return TrainPhase::VideoFinetune;
  throw InvalidArgument("unknown training phase '" + name + "' (expected image or video)");
}

Tensor rollout_loss(const RecurrentStylizer& model, const PerceptualObjective& objective,
                    const VideoSequence& sequence, const LossWeights& weights, StylizeMode mode) {
  if (sequence.length() < 1) throw InvalidArgument("rollout_loss: need at least one frame");
  if (weights.content < 0 || weights.style < 0 || weights.temporal < 0) {
    throw InvalidArgument("rollout_loss: loss weights must be non-negative");
  }
  const bool temporal = weights.temporal > 0 && sequence.length() > 1;
  if (temporal && !sequence.has_flows()) {
    throw InvalidArgument("rollout_loss: temporal term needs flows and masks");
  }
  Tensor total;
  auto accumulate = [&](const Tensor& term) { total = total.defined() ? ops::add(total, term) : term; };
  Tensor p_prev = sequence.frames.front();
  for (std::size_t t = 0; t < sequence.length(); ++t) {
    const Tensor& c = sequence.frames[t];
    const Tensor input_prev = mode == StylizeMode::Independent ? c : p_prev;
    Tensor p = model.forward_step(input_prev, c);
    if (weights.content > 0 || weights.style > 0) {
      accumulate(objective.image_loss(p, c, weights.content, weights.style));
    }
    if (temporal && t >= 1) {
      accumulate(ops::scale(temporal_loss(p_prev, p, sequence.flows[t - 1], sequence.masks[t - 1]),
                            weights.temporal));
    }
    p_prev = p;
  }
  return total.defined() ? total : ops::scale(ops::sum(p_prev), 0.0);
}

std::vector<Tensor> stylize_video(const RecurrentStylizer& model, const VideoSequence& sequence,
                                  StylizeMode mode) {
  NoGradGuard no_grad;
  std::vector<Tensor> out;
  if (sequence.length() == 0) return out;
  Tensor p_prev = sequence.frames.front();
  for (const auto& c : sequence.frames) {
    p_prev = model.forward_step(mode == StylizeMode::Independent ? c : p_prev, c);
    out.push_back(p_prev);
  }
  return out;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("train: epochs must be >= 1");
  if (lr < 0) throw InvalidArgument("train: learning rate must be non-negative");
  if (lambdas.content < 0 || lambdas.style < 0 || lambdas.temporal < 0) {
    throw InvalidArgument("train: loss weights must be non-negative");
  }
  if (phase == TrainPhase::VideoFinetune && bptt_steps < 2) {
    throw InvalidArgument("train: video phase needs bptt_steps >= 2");
  }
}

namespace {

Tensor flip_tensor(const Tensor& t, bool h, bool v) {
  const std::size_t C = t.dim(0), H = t.dim(1), W = t.dim(2);
  std::vector<double> out(t.numel());
  auto in = t.values();
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) {
        const std::size_t sy = v ? H - 1 - y : y, sx = h ? W - 1 - x : x;
        out[(c * H + y) * W + x] = in[(c * H + sy) * W + sx];
      }
  return Tensor(t.shape(), std::move(out));
}

std::vector<double> flip_plane(const std::vector<double>& p, std::size_t H, std::size_t W, bool h, bool v) {
  std::vector<double> out(p.size());
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) out[y * W + x] = p[(v ? H - 1 - y : y) * W + (h ? W - 1 - x : x)];
  return out;
}

FlowField flip_flow(const FlowField& f, bool h, bool v) {
  FlowField out = f;
  out.u = flip_plane(f.u, f.height, f.width, h, v);
  out.v = flip_plane(f.v, f.height, f.width, h, v);
  if (h)
    for (auto& x : out.u) x = -x;
  if (v)
    for (auto& x : out.v) x = -x;
  return out;
}

OcclusionMask flip_mask(const OcclusionMask& m, bool h, bool v) {
  OcclusionMask out = m;
  out.m = flip_plane(m.m, m.height, m.width, h, v);
  return out;
}

struct Sample {
  std::size_t sequence, begin, count;
};

}  // namespace

VideoSequence flip_sequence(const VideoSequence& seq, bool horizontal, bool vertical) {
  if (!horizontal && !vertical) return seq;
  VideoSequence out;
  for (const auto& f : seq.frames) out.frames.push_back(flip_tensor(f, horizontal, vertical));
  for (const auto& f : seq.flows) out.flows.push_back(flip_flow(f, horizontal, vertical));
  for (const auto& f : seq.backward_flows) out.backward_flows.push_back(flip_flow(f, horizontal, vertical));
  for (const auto& m : seq.masks) out.masks.push_back(flip_mask(m, horizontal, vertical));
  for (const auto& m : seq.foreground) out.foreground.push_back(flip_mask(m, horizontal, vertical));
  return out;
}

TrainResult train(RecurrentStylizer& model, const PerceptualObjective& objective,
                  const std::vector<VideoSequence>& dataset, const TrainConfig& config,
                  const std::function<void(std::size_t, double)>& on_epoch) {
  config.validate();
  if (dataset.empty()) throw InvalidArgument("train: empty dataset");
  const std::uint64_t net_before = objective.net().fingerprint();
  const bool video = config.phase == TrainPhase::VideoFinetune;
  LossWeights lambdas = config.lambdas;
  if (!video) lambdas.temporal = 0.0;

  std::vector<Sample> samples;
  for (std::size_t s = 0; s < dataset.size(); ++s) {
    const auto& seq = dataset[s];
    seq.validate();
    if (video) {
      if (!seq.has_flows()) throw InvalidArgument("train: video phase needs flows and masks");
      const std::size_t window = std::min(config.bptt_steps, seq.length());
      for (std::size_t b = 0; b + window <= seq.length(); b += window) samples.push_back({s, b, window});
    } else {
      for (std::size_t f = 0; f < seq.length(); ++f) samples.push_back({s, f, 1});
    }
  }

  const auto params = model.parameters();
  std::vector<AdamState> states;
  for (const auto& p : params) states.push_back(AdamState::zeros(p.numel()));
  const AdamConfig adam{config.lr > 0 ? config.lr : 1.0};

  Rng rng(config.seed);
  TrainResult result;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng.engine());
    double epoch_total = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const Sample& smp = samples[order[k]];
      const bool fh = config.flip_horizontal && rng.coin();
      const bool fv = config.flip_vertical && rng.coin();
      const VideoSequence chunk = flip_sequence(dataset[smp.sequence].slice(smp.begin, smp.count), fh, fv);
      Tensor loss;
      try {
        loss = rollout_loss(model, objective, chunk, lambdas, StylizeMode::Recurrent);
      } catch (const NumericError& e) {
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch + 1) + ", sample " +
                           std::to_string(k) + ": " + e.what());
      }
      epoch_total += loss.item();
      if (config.lr > 0) {
        for (auto p : params) p.zero_grad();
        loss.backward();
        for (std::size_t i = 0; i < params.size(); ++i) {
          auto p = params[i];
          const auto g = p.grad();
          adam_step(p.mutable_values(), g, states[i], adam);
          p.zero_grad();
        }
        ++result.steps;
      }
    }
    result.epoch_loss.push_back(epoch_total / static_cast<double>(samples.size()));
    if (on_epoch) on_epoch(epoch, result.epoch_loss.back());
  }
  model.add_train_steps(result.steps);
  model.set_loss_weights(lambdas);
  if (objective.net().fingerprint() != net_before) {
    throw StateError("train: feature network weights changed during training");
  }
  return result;
}

}  // namespace sst
