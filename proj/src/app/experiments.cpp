#include "stablestyle/app/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "stablestyle/autodiff/ops.hpp"
#include "stablestyle/autodiff/rng.hpp"
#include "stablestyle/errors.hpp"
#include "stablestyle/eval/metrics.hpp"
#include "stablestyle/flow/flow.hpp"
#include "stablestyle/flow/synthetic.hpp"
#include "stablestyle/io/csv.hpp"
#include "stablestyle/io/weights.hpp"
#include "stablestyle/perceptual/losses.hpp"

namespace sst::app {

FeatureNet load_feature_net(const std::filesystem::path& path, std::uint64_t seed) {
  if (path.empty()) return FeatureNet::small_vgg(seed);
  return FeatureNet::from_weights(read_weights(path));
}

Tensor contrast_style(double contrast, std::size_t size, std::uint64_t seed) {
  if (!(contrast > 0.0 && contrast <= 2.0)) {
    throw InvalidArgument("style contrast must lie in (0, 2], got " + std::to_string(contrast));
  }
  Rng rng(seed);
  Tensor texture = procedural_texture(3, size, size, rng);
  return ops::scale(texture, 0.5 * contrast);
}

StylizeMode natural_mode(const RecurrentStylizer& model) {
  return model.loss_weights().temporal > 0.0 && model.train_steps() > 0 ? StylizeMode::Recurrent
                                                                         : StylizeMode::Independent;
}

std::vector<VideoSequence> training_corpus(const CorpusOptions& o) {
  if (o.scenes == 0) throw InvalidArgument("training corpus needs at least one scene");
  std::vector<VideoSequence> out;
  for (std::size_t i = 0; i < o.scenes; ++i) {
    const std::uint64_t seed = o.seed * 1000003ULL + i;
    switch (i % 3) {
      case 0:
        out.push_back(synthetic_scene(SceneKind::GlobalTranslate, {o.noise, 1, 1, 16}, o.frames, o.size, o.size, seed));
        break;
      case 1:
        out.push_back(synthetic_scene(SceneKind::MovingSquare, {o.noise, 2, 1, std::max<std::size_t>(o.size * 3 / 8, 2)},
                                      o.frames, o.size, o.size, seed));
        break;
      default:
        out.push_back(synthetic_scene(SceneKind::StaticNoise, {o.noise, 0, 0, 16}, o.frames, o.size, o.size, seed));
        break;
    }
  }
  return out;
}

std::vector<VideoSequence> static_noise_scenes(const StaticSceneOptions& o) {
  std::vector<VideoSequence> out;
  for (std::size_t i = 0; i < o.count; ++i) {
    out.push_back(synthetic_scene(SceneKind::StaticNoise, {o.noise, 0, 0, 16}, o.frames, o.size, o.size,
                                  o.seed * 1000003ULL + 500 + i));
  }
  return out;
}

std::vector<VideoSequence> moving_square_scenes(const SquareSceneOptions& o) {
  std::vector<VideoSequence> out;
  for (std::size_t i = 0; i < o.count; ++i) {
    out.push_back(synthetic_scene(SceneKind::MovingSquare, {o.noise, o.dx, o.dy, o.square}, o.frames, o.height,
                                  o.width, o.seed * 1000003ULL + 700 + i));
  }
  return out;
}

std::vector<Tensor> textured_frames(std::size_t count, std::size_t size, std::uint64_t seed) {
  std::vector<Tensor> out;
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    Rng local = rng.fork(i);
    out.push_back(procedural_texture(3, size, size, local));
  }
  return out;
}

namespace {

GradCheckRow grad_row(const std::string& name, std::size_t instance, double tolerance,
                      const std::function<Tensor()>& loss, std::vector<Tensor> inputs,
                      const GradCheckOptions& options) {
  GradCheckRow row{name, instance, check_gradients(loss, std::move(inputs), options), tolerance, false};
  row.pass = row.result.relative_error < tolerance;
  return row;
}

FlowField random_flow(std::size_t h, std::size_t w, Rng& rng) {
  FlowField f = FlowField::zeros(h, w);
  for (auto& u : f.u) u = rng.uniform(-1.5, 1.5);
  for (auto& v : f.v) v = rng.uniform(-1.5, 1.5);
  return f;
}

}  // namespace

std::vector<GradCheckRow> gradient_checks(std::size_t instances, std::size_t size, std::uint64_t seed,
                                          const GradCheckOptions& options, std::size_t rollout_coords) {
  if (size < 4 || size % 4 != 0) throw InvalidArgument("gradient checks need a size divisible by 4");
  std::vector<GradCheckRow> rows;
  Rng root(seed);
  for (std::size_t k = 0; k < instances; ++k) {
    Rng rng = root.fork(k);
    const FeatureNet net = FeatureNet::small_vgg(rng.next());
    const Tensor style = random_uniform({3, size, size}, rng);
    const Tensor content = random_uniform({3, size, size}, rng);
    const PerceptualObjective objective(net, style);
    GradCheckOptions opt = options;
    opt.seed = rng.next();

    Tensor p = random_uniform({3, size, size}, rng, 0.0, 1.0, true);
    const auto c_feats = objective.content_features(content);
    const auto grams = objective.grams();
    rows.push_back(grad_row("content", k, 1e-4, [&] {
      return content_loss(net.extract(p, objective.content_taps()), c_feats);
    }, {p}, opt));
    rows.push_back(grad_row("style", k, 1e-4, [&] {
      return style_loss(net.extract(p, objective.style_taps()), grams);
    }, {p}, opt));
    rows.push_back(grad_row("image", k, 1e-4, [&] { return objective.image_loss(p, c_feats, 1.0, 1.0); }, {p}, opt));

    Tensor prev = random_uniform({3, size, size}, rng, 0.0, 1.0, true);
    const FlowField flow = random_flow(size, size, rng);
    OcclusionMask mask = OcclusionMask::ones(size, size);
    for (auto& m : mask.m) m = rng.uniform();
    rows.push_back(grad_row("temporal", k, 1e-4, [&] { return temporal_loss(prev, p, flow, mask); }, {prev, p}, opt));

    const RecurrentStylizer model = RecurrentStylizer::create({}, rng.next());
    const VideoSequence seq =
        synthetic_scene(SceneKind::MovingSquare, {0.0, 1, 1, size / 2}, 3, size, size, rng.next());
    GradCheckOptions ropt = opt;
    ropt.max_coords_per_input = rollout_coords;
    rows.push_back(grad_row("rollout", k, 1e-3, [&] {
      return rollout_loss(model, objective, seq, LossWeights{}, StylizeMode::Recurrent);
    }, model.parameters(), ropt));
  }
  return rows;
}

std::vector<OrbitTrial> orbit_trials(const std::vector<std::size_t>& channels,
                                     const std::vector<std::size_t>& pixels, std::size_t trials,
                                     std::uint64_t seed) {
  if (channels.empty() || pixels.empty()) throw InvalidArgument("orbit trials need channel and pixel counts");
  std::vector<OrbitTrial> out;
  Rng root(seed);
  for (std::size_t k = 0; k < trials; ++k) {
    Rng rng = root.fork(k);
    const std::size_t c = channels[k % channels.size()];
    const std::size_t n = pixels[(k / channels.size()) % pixels.size()];
    const Tensor phi_s = random_normal({c, n}, rng);
    const geometry::GramObjective j(phi_s);
    const Tensor moved = geometry::orbit_sample(phi_s, rng.next());
    OrbitTrial t{k, c, n, j.value(moved), 1e-10 * std::max(1.0, j.target_gram_norm2()), false};
    t.pass = t.objective <= t.tolerance;
    out.push_back(t);
  }
  return out;
}

std::vector<SphereTrial> sphere_trials(std::size_t channels, std::size_t pixels, std::size_t trials,
                                       const geometry::MinimizeOptions& options, std::uint64_t seed) {
  Rng rng(seed);
  const Tensor phi_s = random_normal({channels, pixels}, rng);
  const geometry::GramObjective j(phi_s);
  const double radius = geometry::solution_radius(phi_s);
  const double tol = 1e-8 * std::max(1.0, j.target_gram_norm2());
  std::vector<SphereTrial> out;
  for (std::size_t k = 0; k < trials; ++k) {
    Rng local = rng.fork(k);
    const Tensor init = random_normal({channels, pixels}, local);
    const auto r = geometry::minimize_objective(phi_s, init, options);
    SphereTrial t;
    t.trial = k;
    t.initial_objective = r.initial_objective;
    t.final_objective = r.final_objective;
    t.norm = r.final_norm;
    t.radius = radius;
    t.relative_gap = std::abs(r.final_norm - radius) / radius;
    t.converged = r.final_objective <= tol;
    out.push_back(t);
  }
  return out;
}

TraceStudyRun run_trace_study(const FeatureNet& net, const TraceStudyOptions& o) {
  if (o.contrasts.size() < 4) throw InvalidArgument("trace study needs at least four styles");
  const auto corpus = training_corpus(o.corpus);
  const auto scenes = static_noise_scenes(o.scenes);
  std::vector<RecurrentStylizer> models;
  std::vector<eval::StyleCase> cases;
  models.reserve(o.contrasts.size());
  TrainConfig tc = o.train;
  tc.phase = TrainPhase::ImagePretrain;
  for (std::size_t i = 0; i < o.contrasts.size(); ++i) {
    const Tensor style = contrast_style(o.contrasts[i], o.style_size, o.seed);
    const PerceptualObjective objective(net, style, o.taps);
    // Every style starts from the same initialization and sees the same samples.
    RecurrentStylizer model = RecurrentStylizer::create(o.arch, o.seed + 17);
    train(model, objective, corpus, tc);
    models.push_back(std::move(model));
    cases.push_back({"contrast-" + io::format_number(o.contrasts[i]), style, nullptr});
  }
  for (std::size_t i = 0; i < cases.size(); ++i) cases[i].model = &models[i];
  return {o.contrasts, eval::trace_instability_study(cases, scenes, net, o.taps, StylizeMode::Independent)};
}

eval::DistortionCurve mean_distortion_curve(const std::vector<Tensor>& frames, std::size_t size,
                                            const eval::PatchStylizer& stylize, eval::DistortionKind kind,
                                            const std::vector<double>& magnitudes) {
  if (frames.empty()) throw InvalidArgument("distortion study needs at least one frame");
  eval::DistortionCurve mean;
  mean.magnitudes = magnitudes;
  mean.input_ssim.assign(magnitudes.size(), 0.0);
  mean.output_ssim.assign(magnitudes.size(), 0.0);
  for (const auto& f : frames) {
    if (f.dim(1) < size) throw InvalidArgument("distortion frame shorter than the patch");
    const auto c = eval::distortion_curves(f, (f.dim(1) - size) / 2, 0, size, stylize, kind, magnitudes);
    for (std::size_t i = 0; i < magnitudes.size(); ++i) {
      mean.input_ssim[i] += c.input_ssim[i];
      mean.output_ssim[i] += c.output_ssim[i];
    }
  }
  // Sum first, divide once: a column of exact 1.0 values stays exactly 1.0.
  const double n = static_cast<double>(frames.size());
  for (std::size_t i = 0; i < magnitudes.size(); ++i) {
    mean.input_ssim[i] /= n;
    mean.output_ssim[i] /= n;
  }
  return mean;
}

}  // namespace sst::app
