#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stablestyle/autodiff/gradcheck.hpp"
#include "stablestyle/eval/studies.hpp"
#include "stablestyle/flow/video.hpp"
#include "stablestyle/geometry/gram_geometry.hpp"
#include "stablestyle/perceptual/feature_net.hpp"
#include "stablestyle/stylizer/stylizer.hpp"

// Reusable study drivers shared by the command runners and the test suites.
namespace sst::app {

// Feature net from a GSLW file, or the seeded built-in net when path is empty.
FeatureNet load_feature_net(const std::filesystem::path& path, std::uint64_t seed);

// contrast * 0.5 * texture for one fixed seeded texture. With a zero-bias
// feature net every tapped Gram trace scales exactly with contrast^2.
// contrast must lie in (0, 2] so values stay inside [0, 1].
Tensor contrast_style(double contrast, std::size_t size, std::uint64_t seed);

// Image-only models evaluate frame by frame; models trained with a temporal
// weight run recurrently.
StylizeMode natural_mode(const RecurrentStylizer& model);

struct CorpusOptions {
  std::size_t scenes = 8;
  std::size_t frames = 4;
  std::size_t size = 32;
  double noise = 0.02;
  std::uint64_t seed = 0;
};

// Cycles global-translate, moving-square and static-noise scenes.
std::vector<VideoSequence> training_corpus(const CorpusOptions& options);

struct StaticSceneOptions {
  std::size_t count = 5;
  std::size_t frames = 6;
  std::size_t size = 32;
  double noise = 0.02;
  std::uint64_t seed = 0;
};

std::vector<VideoSequence> static_noise_scenes(const StaticSceneOptions& options);

struct SquareSceneOptions {
  std::size_t count = 3;
  std::size_t frames = 6;
  std::size_t height = 64, width = 96;
  std::size_t square = 20;
  int dx = 2, dy = 1;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

std::vector<VideoSequence> moving_square_scenes(const SquareSceneOptions& options);

// Independent square textures for the distortion study.
std::vector<Tensor> textured_frames(std::size_t count, std::size_t size, std::uint64_t seed);

struct GradCheckRow {
  std::string loss;
  std::size_t instance = 0;
  GradCheckResult result;
  double tolerance = 0.0;
  bool pass = false;
};

// Finite-difference checks of the content, style, combined image and
// temporal losses and of a three-frame recurrent rollout, on fresh random
// instances of the given spatial size.
std::vector<GradCheckRow> gradient_checks(std::size_t instances, std::size_t size, std::uint64_t seed,
                                          const GradCheckOptions& options = {},
                                          std::size_t rollout_coords = 24);

struct OrbitTrial {
  std::size_t trial = 0;
  std::size_t channels = 0, pixels = 0;
  double objective = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// Trial k uses channels[k % |channels|] and pixels[(k / |channels|) % |pixels|]:
// a random Phi_s, a Haar U, and J(Phi_s U, Phi_s) against
// 1e-10 * max(1, ||Phi_s Phi_s^T||_F^2).
std::vector<OrbitTrial> orbit_trials(const std::vector<std::size_t>& channels,
                                     const std::vector<std::size_t>& pixels, std::size_t trials,
                                     std::uint64_t seed);

struct SphereTrial {
  std::size_t trial = 0;
  double initial_objective = 0.0, final_objective = 0.0;
  double norm = 0.0, radius = 0.0;
  double relative_gap = 0.0;  // |norm - radius| / radius
  bool converged = false;     // final J <= 1e-8 * max(1, ||Phi_s Phi_s^T||_F^2)
};

// Minimizes J from random initializations for one random target.
std::vector<SphereTrial> sphere_trials(std::size_t channels, std::size_t pixels, std::size_t trials,
                                       const geometry::MinimizeOptions& options, std::uint64_t seed);

struct TraceStudyOptions {
  std::vector<double> contrasts{0.25, 0.5, 0.75, 1.0, 1.5, 2.0};
  std::size_t style_size = 32;
  std::vector<std::string> taps = default_style_taps();
  StylizerArch arch;
  TrainConfig train;
  CorpusOptions corpus;
  StaticSceneOptions scenes;
  std::uint64_t seed = 0;
};

struct TraceStudyRun {
  std::vector<double> contrasts;
  eval::TraceStudy study;
};

// Trains one image-only model per contrast-scaled style and correlates the
// style's Gram trace with the model's instability on static-noise scenes.
TraceStudyRun run_trace_study(const FeatureNet& net, const TraceStudyOptions& options);

// Distortion curve averaged over the given frames; the patch is the
// size x size window at row (H - size) / 2, column 0.
eval::DistortionCurve mean_distortion_curve(const std::vector<Tensor>& frames, std::size_t size,
                                            const eval::PatchStylizer& stylize, eval::DistortionKind kind,
                                            const std::vector<double>& magnitudes);

}  // namespace sst::app
