#include <cmath>

#include "doctest.h"
#include "stablestyle/autodiff/gradcheck.hpp"
#include "stablestyle/autodiff/ops.hpp"
#include "stablestyle/autodiff/rng.hpp"
#include "stablestyle/errors.hpp"
#include "stablestyle/eval/metrics.hpp"
#include "stablestyle/flow/synthetic.hpp"
#include "stablestyle/stylizer/stylizer.hpp"

using namespace sst;

namespace {

const StylizerArch kTiny{4, 8, 1};

struct Fixture {
  FeatureNet net = FeatureNet::small_vgg(11);
  Tensor style;
  Fixture() {
    Rng rng(5);
    style = procedural_texture(3, 16, 16, rng);
  }
};

std::vector<double> flat_weights(const RecurrentStylizer& m) {
  std::vector<double> out;
  for (const auto& p : m.parameters()) out.insert(out.end(), p.values().begin(), p.values().end());
  return out;
}

VideoSequence single_frame(const Tensor& frame) {
  VideoSequence s;
  s.frames.push_back(frame);
  return s;
}

}  // namespace

TEST_CASE("forward step keeps the frame shape and stays in [0,1]") {
  auto model = RecurrentStylizer::create(StylizerArch{}, 1);
  Rng rng(1);
  for (auto [h, w] : {std::pair{16u, 16u}, std::pair{8u, 20u}, std::pair{32u, 24u}}) {
    Tensor c = random_uniform({3, h, w}, rng);
    Tensor p = model.forward_step(random_uniform({3, h, w}, rng), c);
    CHECK(p.shape() == c.shape());
    for (double v : p.values()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  CHECK_THROWS_AS(model.forward_step(Tensor::zeros({3, 8, 8}), Tensor::zeros({3, 8, 12})), InvalidArgument);
  CHECK_THROWS_AS(model.forward_step(Tensor::zeros({3, 6, 8}), Tensor::zeros({3, 6, 8})), InvalidArgument);
}

TEST_CASE("zeroed output conv gives a constant 0.5 image") {
  auto model = RecurrentStylizer::create(kTiny, 2);
  for (auto& v : model.output_conv().weight.mutable_values()) v = 0.0;
  for (auto& v : model.output_conv().bias.mutable_values()) v = 0.0;
  Rng rng(2);
  Tensor p = model.forward_step(random_uniform({3, 8, 8}, rng), random_uniform({3, 8, 8}, rng));
  for (double v : p.values()) CHECK(v == 0.5);
}

TEST_CASE("weights round-trip in memory and carry metadata") {
  auto model = RecurrentStylizer::create(kTiny, 3);
  model.set_loss_weights({2.0, 0.5, 7.0});
  model.add_train_steps(12);
  auto back = RecurrentStylizer::from_weights(model.to_weights());
  CHECK(back.fingerprint() == model.fingerprint());
  CHECK(back.arch().residual_blocks == 1);
  CHECK(back.loss_weights().temporal == 7.0);
  CHECK(back.train_steps() == 12);
}

TEST_CASE("rollout loss examples") {
  Fixture fx;
  auto model = RecurrentStylizer::create(kTiny, 4);
  PerceptualObjective obj(fx.net, fx.style);
  auto scene = synthetic_scene(SceneKind::GlobalTranslate, {0.0, 1, 0, 16}, 3, 16, 16, 4);
  CHECK(rollout_loss(model, obj, scene, {0, 0, 0}).item() == 0.0);

  const double one = rollout_loss(model, obj, scene.slice(0, 1), {1.0, 0.5, 9.0}).item();
  Tensor p1 = model.forward_step(scene.frames[0], scene.frames[0]);
  CHECK(one == doctest::Approx(obj.image_loss(p1, scene.frames[0], 1.0, 0.5).item()).epsilon(1e-12));

  // lambda_t = 0 and p_prev fixed to c_t: per-frame terms simply add up.
  double sum = 0.0;
  for (const auto& c : scene.frames) sum += obj.image_loss(model.forward_step(c, c), c, 1.0, 0.5).item();
  const double decoupled = rollout_loss(model, obj, scene, {1.0, 0.5, 0.0}, StylizeMode::Independent).item();
  CHECK(decoupled == doctest::Approx(sum).epsilon(1e-12));

  VideoSequence no_flow;
  no_flow.frames = scene.frames;
  CHECK_THROWS_AS(rollout_loss(model, obj, no_flow, {1.0, 0.5, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(rollout_loss(model, obj, scene, {-1.0, 0.5, 1.0}), InvalidArgument);
}

TEST_CASE("rollout gradient passes finite differences through a three-step unroll") {
  Fixture fx;
  auto model = RecurrentStylizer::create(kTiny, 6);
  PerceptualObjective obj(fx.net, fx.style);
  auto scene = synthetic_scene(SceneKind::MovingSquare, {0.0, 1, 1, 6}, 3, 16, 16, 6);
  const auto params = model.parameters();
  // down1 weight and bias come first in the parameter order. A 1e-5 step can
  // straddle ReLU kinks in a net this narrow; 1e-6 stays on one side.
  const GradCheckOptions opt{1e-6, 24, 1};
  const auto r = check_gradients([&] { return rollout_loss(model, obj, scene, LossWeights{}); },
                                 {params[0], params[1]}, opt);
  CHECK(r.relative_error < 1e-3);
}

TEST_CASE("stylize_video: T=1 is one forward step, deterministic, recurrent state threads through") {
  auto model = RecurrentStylizer::create(kTiny, 7);
  auto scene = synthetic_scene(SceneKind::StaticNoise, {0.02, 0, 0, 16}, 3, 8, 8, 7);
  auto one = stylize_video(model, scene.slice(0, 1));
  REQUIRE(one.size() == 1);
  Tensor direct = model.forward_step(scene.frames[0], scene.frames[0]);
  for (std::size_t i = 0; i < direct.numel(); ++i) CHECK(one[0].values()[i] == direct.values()[i]);

  auto a = stylize_video(model, scene), b = stylize_video(model, scene);
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t i = 0; i < a[t].numel(); ++i) CHECK(a[t].values()[i] == b[t].values()[i]);
  Tensor second = model.forward_step(a[0], scene.frames[1]);
  for (std::size_t i = 0; i < second.numel(); ++i) CHECK(a[1].values()[i] == second.values()[i]);
}

TEST_CASE("zero learning rate leaves the weights unchanged") {
  Fixture fx;
  auto model = RecurrentStylizer::create(kTiny, 8);
  PerceptualObjective obj(fx.net, fx.style);
  const auto before = flat_weights(model);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.lr = 0.0;
  auto r = train(model, obj, {synthetic_scene(SceneKind::StaticNoise, {}, 2, 16, 16, 8)}, cfg);
  CHECK(flat_weights(model) == before);
  CHECK(r.epoch_loss.size() == 2);
  CHECK(r.steps == 0);
}

TEST_CASE("image pretraining on one pair halves the loss within 200 steps") {
  Fixture fx;
  auto model = RecurrentStylizer::create(StylizerArch{}, 9);
  PerceptualObjective obj(fx.net, fx.style);
  Rng rng(9);
  const Tensor content = procedural_texture(3, 16, 16, rng);
  const LossWeights w{1.0, 1e-2, 0.0};
  const double before = rollout_loss(model, obj, single_frame(content), w).item();
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.flip_horizontal = cfg.flip_vertical = false;
  cfg.lambdas = w;
  const auto r = train(model, obj, {single_frame(content)}, cfg);
  CHECK(r.steps == 200);
  const double after = rollout_loss(model, obj, single_frame(content), w).item();
  MESSAGE("loss " << before << " -> " << after);
  CHECK(after <= 0.5 * before);
  CHECK(model.loss_weights().temporal == 0.0);
}

TEST_CASE("training is a pure function of the seed and never touches the feature net") {
  Fixture fx;
  PerceptualObjective obj(fx.net, fx.style);
  const auto net_hash = fx.net.fingerprint();
  std::vector<VideoSequence> data{synthetic_scene(SceneKind::GlobalTranslate, {0.01, 1, 0, 16}, 4, 16, 16, 1),
                                  synthetic_scene(SceneKind::StaticNoise, {0.02, 0, 0, 16}, 4, 16, 16, 2)};
  TrainConfig cfg;
  cfg.phase = TrainPhase::VideoFinetune;
  cfg.epochs = 2;
  cfg.bptt_steps = 2;
  cfg.seed = 3;
  auto a = RecurrentStylizer::create(kTiny, 10), b = RecurrentStylizer::create(kTiny, 10);
  const auto ra = train(a, obj, data, cfg), rb = train(b, obj, data, cfg);
  CHECK(flat_weights(a) == flat_weights(b));
  CHECK(ra.epoch_loss == rb.epoch_loss);
  CHECK(fx.net.fingerprint() == net_hash);
}

TEST_CASE("video finetuning lowers instability on static-noise scenes") {
  Fixture fx;
  PerceptualObjective obj(fx.net, fx.style);
  std::vector<VideoSequence> data;
  for (std::uint64_t s = 0; s < 3; ++s) data.push_back(synthetic_scene(SceneKind::StaticNoise, {0.03, 0, 0, 16}, 4, 16, 16, s));
  auto model = RecurrentStylizer::create(StylizerArch{}, 12);
  TrainConfig image;
  image.epochs = 6;
  image.seed = 1;
  train(model, obj, data, image);

  auto finetuned = model.clone();
  TrainConfig video = image;
  video.phase = TrainPhase::VideoFinetune;
  video.epochs = 6;
  train(finetuned, obj, data, video);

  double before = 0.0, after = 0.0;
  for (std::uint64_t s = 10; s < 13; ++s) {
    auto scene = synthetic_scene(SceneKind::StaticNoise, {0.03, 0, 0, 16}, 6, 16, 16, s);
    const auto b = stylize_video(model, scene, StylizeMode::Independent);
    const auto a = stylize_video(finetuned, scene, StylizeMode::Recurrent);
    before += eval::instability(b);
    after += eval::instability(a);
  }
  MESSAGE("instability " << before << " -> " << after);
  CHECK(after < before);
}

TEST_CASE("train validates its configuration") {
  Fixture fx;
  auto model = RecurrentStylizer::create(kTiny, 13);
  PerceptualObjective obj(fx.net, fx.style);
  const auto scene = synthetic_scene(SceneKind::StaticNoise, {}, 3, 8, 8, 1);
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(train(model, obj, {scene}, cfg), InvalidArgument);
  cfg.epochs = 1;
  cfg.lr = -1.0;
  CHECK_THROWS_AS(train(model, obj, {scene}, cfg), InvalidArgument);
  cfg.lr = 1e-3;
  cfg.phase = TrainPhase::VideoFinetune;
  cfg.bptt_steps = 1;
  CHECK_THROWS_AS(train(model, obj, {scene}, cfg), InvalidArgument);
  cfg.bptt_steps = 2;
  VideoSequence frames_only;
  frames_only.frames = scene.frames;
  CHECK_THROWS_AS(train(model, obj, {frames_only}, cfg), InvalidArgument);
  CHECK_THROWS_AS(train(model, obj, {}, cfg), InvalidArgument);
  CHECK(parse_train_phase("video") == TrainPhase::VideoFinetune);
  CHECK_THROWS_AS(parse_train_phase("audio"), InvalidArgument);
  CHECK(parse_stylize_mode("independent") == StylizeMode::Independent);
}

TEST_CASE("flips mirror frames, negate flows and keep consistency") {
  auto seq = synthetic_scene(SceneKind::MovingSquare, {0.0, 2, 1, 6}, 3, 16, 20, 14);
  for (auto [h, v] : {std::pair{true, false}, std::pair{false, true}, std::pair{true, true}}) {
    auto f = flip_sequence(seq, h, v);
    CHECK(f.frames[0].at(1, 2, 3) == seq.frames[0].at(1, v ? 13 : 2, h ? 16 : 3));
    for (std::size_t t = 1; t < 3; ++t)
      CHECK(temporal_loss(f.frames[t - 1], f.frames[t], f.flows[t - 1], f.masks[t - 1]).item() < 1e-12);
  }
}
