#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stablestyle/autodiff/tensor.hpp"
#include "stablestyle/flow/video.hpp"
#include "stablestyle/geometry/gram_geometry.hpp"
#include "stablestyle/perceptual/feature_net.hpp"
#include "stablestyle/stylizer/optim.hpp"
#include "stablestyle/stylizer/stylizer.hpp"

namespace sst::eval {

// Maps a whole sequence to stylized frames (identity, a trained model, ...).
using SequenceStylizer = std::function<std::vector<Tensor>(const VideoSequence&)>;
// Stylizes one patch on its own (p_prev = the patch itself).
using PatchStylizer = std::function<Tensor(const Tensor&)>;

SequenceStylizer model_sequence_stylizer(const RecurrentStylizer& model, StylizeMode mode);
PatchStylizer model_patch_stylizer(const RecurrentStylizer& model);

struct InstabilityReport {
  std::string style;
  std::vector<geometry::TraceRow> traces;
  double instability = 0.0;  // mean over scenes of mean adjacent-frame MSE
  std::size_t frames = 0;
};

struct TapCorrelation {
  std::string tap;
  std::optional<double> spearman;  // nullopt = degenerate (no rank variance)
};

struct TraceStudy {
  std::vector<InstabilityReport> reports;
  std::vector<TapCorrelation> correlations;
};

struct StyleCase {
  std::string name;
  Tensor image;
  const RecurrentStylizer* model = nullptr;
};

// Per style: Gram trace at each tap and the model's instability over the
// static scenes; then Spearman rho(trace, instability) per tap.
TraceStudy trace_instability_study(const std::vector<StyleCase>& styles,
                                   const std::vector<VideoSequence>& static_scenes,
                                   const FeatureNet& net, const std::vector<std::string>& taps,
                                   StylizeMode mode = StylizeMode::Independent);

enum class DistortionKind { Shift, BlurSharpen };

DistortionKind parse_distortion_kind(const std::string& name);
// Shift: 0..19 px. Blur-sharpen: negative = Gaussian blur sigma, positive =
// unsharp-mask amount, 0 = identity.
std::vector<double> default_magnitudes(DistortionKind kind);

Tensor gaussian_blur(const Tensor& image, double sigma);
Tensor unsharp_mask(const Tensor& image, double amount, double sigma = 1.0);

struct DistortionCurve {
  std::vector<double> magnitudes;
  std::vector<double> input_ssim;
  std::vector<double> output_ssim;
};

// The patch is the size x size window of `frame` at (y0, x0). A shift of m
// re-crops the window m pixels to the right, so it must stay inside the frame;
// both patches are then compared at the same coordinates.
DistortionCurve distortion_curves(const Tensor& frame, std::size_t y0, std::size_t x0, std::size_t size,
                                  const PatchStylizer& stylize, DistortionKind kind,
                                  const std::vector<double>& magnitudes);

struct PatchProtocol {
  std::size_t patch = 32;
  std::size_t search = 8;  // desk scale; 20 at full resolution
  std::size_t candidates = 200;  // random draws when looking for a background patch
  std::uint64_t seed = 0;
};

struct PatchMatch {
  std::size_t pair = 0;
  std::size_t y = 0, x = 0;  // patch corner in frame t
  long dy = 0, dx = 0;       // best offset into frame t+1
  double psnr = 0.0, ssim = 0.0;
};

struct StabilityScore {
  double mean_psnr = 0.0;  // +inf if any pair is identical
  double mean_ssim = 0.0;
  std::vector<PatchMatch> matches;
};

StabilityScore patch_stability(const VideoSequence& sequence, const SequenceStylizer& stylize,
                               const PatchProtocol& protocol);

struct TimingRow {
  std::size_t resolution = 0;
  double feedforward_seconds = 0.0;
  std::optional<double> optim_seconds;
  std::optional<double> speedup;
};

struct TimingOptions {
  std::vector<std::size_t> resolutions{64, 128, 256};
  std::size_t repeats = 5;
  std::size_t optim_iters = 250;
  std::size_t optim_max_resolution = 64;  // optimization is timed only up to this size
  std::uint64_t seed = 0;
};

// Median wall-clock seconds per frame after one untimed warm-up run.
std::vector<TimingRow> timing(const RecurrentStylizer& model, const FeatureNet& net, const Tensor& style,
                              const OptimConfig& optim, const TimingOptions& options);

}  // namespace sst::eval
