#include "stablestyle/eval/studies.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "stablestyle/autodiff/rng.hpp"
#include "stablestyle/errors.hpp"
#include "stablestyle/eval/metrics.hpp"
#include "stablestyle/flow/synthetic.hpp"

namespace sst::eval {

SequenceStylizer model_sequence_stylizer(const RecurrentStylizer& model, StylizeMode mode) {
  return [&model, mode](const VideoSequence& seq) { return stylize_video(model, seq, mode); };
}

PatchStylizer model_patch_stylizer(const RecurrentStylizer& model) {
  return [&model](const Tensor& patch) {
    NoGradGuard no_grad;
    return model.forward_step(patch, patch);
  };
}

TraceStudy trace_instability_study(const std::vector<StyleCase>& styles,
                                   const std::vector<VideoSequence>& static_scenes,
                                   const FeatureNet& net, const std::vector<std::string>& taps,
                                   StylizeMode mode) {
  if (static_scenes.empty()) throw InvalidArgument("trace study: no scenes");
  TraceStudy study;
  for (const auto& s : styles) {
    if (!s.model || s.model->train_steps() == 0) {
      throw InvalidArgument("trace study: style '" + s.name + "' has no trained model");
    }
    InstabilityReport r;
    r.style = s.name;
    r.traces = geometry::trace_report(s.image, net, taps);
    for (const auto& scene : static_scenes) {
      const auto frames = stylize_video(*s.model, scene, mode);
      r.instability += instability(frames);
      r.frames += frames.size();
    }
    r.instability /= static_cast<double>(static_scenes.size());
    study.reports.push_back(std::move(r));
  }
  for (std::size_t j = 0; j < taps.size(); ++j) {
    std::vector<double> tr, inst;
    for (const auto& r : study.reports) {
      tr.push_back(r.traces[j].trace);
      inst.push_back(r.instability);
    }
    study.correlations.push_back({taps[j], spearman(tr, inst)});
  }
  return study;
}

DistortionKind parse_distortion_kind(const std::string& name) {
  if (name == "shift") return DistortionKind::Shift;
  if (name == "blur-sharpen") return DistortionKind::BlurSharpen;
  throw InvalidArgument("unknown distortion kind '" + name + "' (expected shift or blur-sharpen)");
}

std::vector<double> default_magnitudes(DistortionKind kind) {
  if (kind == DistortionKind::Shift) {
    std::vector<double> m;
    for (int i = 0; i < 20; ++i) m.push_back(i);
    return m;
  }
  return {-3.0, -2.5, -2.0, -1.5, -1.0, -0.5, 0.0, 0.2, 0.5, 0.8, 1.1, 1.4, 1.7, 2.0};
}

Tensor gaussian_blur(const Tensor& image, double sigma) {
  if (!(sigma > 0)) throw InvalidArgument("gaussian_blur: sigma must be positive");
  const std::size_t C = image.dim(0), H = image.dim(1), W = image.dim(2);
  const long r = static_cast<long>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double ks = 0.0;
  for (long i = -r; i <= r; ++i) ks += k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (auto& v : k) v /= ks;
  auto clampi = [](long v, std::size_t n) { return static_cast<std::size_t>(std::clamp(v, 0L, static_cast<long>(n) - 1)); };
  auto src = image.values();
  std::vector<double> tmp(src.size()), out(src.size());
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) {
        double s = 0.0;
        for (long i = -r; i <= r; ++i) s += k[i + r] * src[(c * H + y) * W + clampi(static_cast<long>(x) + i, W)];
        tmp[(c * H + y) * W + x] = s;
      }
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) {
        double s = 0.0;
        for (long i = -r; i <= r; ++i) s += k[i + r] * tmp[(c * H + clampi(static_cast<long>(y) + i, H)) * W + x];
        out[(c * H + y) * W + x] = s;
      }
  return Tensor(image.shape(), std::move(out));
}

Tensor unsharp_mask(const Tensor& image, double amount, double sigma) {
  const Tensor blurred = gaussian_blur(image, sigma);
  std::vector<double> out(image.numel());
  auto a = image.values(), b = blurred.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(a[i] + amount * (a[i] - b[i]), 0.0, 1.0);
  return Tensor(image.shape(), std::move(out));
}

DistortionCurve distortion_curves(const Tensor& frame, std::size_t y0, std::size_t x0, std::size_t size,
                                  const PatchStylizer& stylize, DistortionKind kind,
                                  const std::vector<double>& magnitudes) {
  const Tensor patch = crop(frame, y0, x0, size, size);
  const Tensor styled = stylize(patch);
  DistortionCurve curve;
  for (double m : magnitudes) {
    double in_ssim = 1.0, out_ssim = 1.0;
    if (kind == DistortionKind::Shift) {
      if (m < 0 || m != std::floor(m)) throw InvalidArgument("distortion: shifts must be non-negative integers");
      const auto s = static_cast<std::size_t>(m);
      if (s >= size) throw InvalidArgument("distortion: shift exceeds patch size");
      if (x0 + s + size > frame.dim(2)) throw InvalidArgument("distortion: shifted patch leaves the frame");
      if (s > 0) {
        // Pixel-wise at the same patch coordinates, as a viewer would see it.
        const Tensor moved = crop(frame, y0, x0 + s, size, size);
        in_ssim = ssim(patch, moved);
        out_ssim = ssim(styled, stylize(moved));
      }
    } else if (m != 0.0) {
      const Tensor d = m < 0 ? gaussian_blur(patch, -m) : unsharp_mask(patch, m);
      in_ssim = ssim(patch, d);
      out_ssim = ssim(styled, stylize(d));
    }
    curve.magnitudes.push_back(m);
    curve.input_ssim.push_back(in_ssim);
    curve.output_ssim.push_back(out_ssim);
  }
  return curve;
}

namespace {
bool touches_foreground(const OcclusionMask& fg, std::size_t y0, std::size_t x0, std::size_t size) {
  for (std::size_t y = y0; y < y0 + size; ++y)
    for (std::size_t x = x0; x < x0 + size; ++x)
      if (fg.at(y, x) > 0) return true;
  return false;
}
}  // namespace

StabilityScore patch_stability(const VideoSequence& sequence, const SequenceStylizer& stylize,
                               const PatchProtocol& protocol) {
  sequence.validate();
  if (sequence.length() < 2) throw InvalidArgument("patch stability: need at least two frames");
  const std::size_t H = sequence.height(), W = sequence.width(), P = protocol.patch;
  if (P > H || P > W) throw InvalidArgument("patch stability: patch larger than frame");
  const bool have_fg = !sequence.foreground.empty();
  const auto empty_fg = OcclusionMask::zeros(H, W);
  auto fg_at = [&](std::size_t t) -> const OcclusionMask& { return have_fg ? sequence.foreground[t] : empty_fg; };

  const auto styled = stylize(sequence);
  if (styled.size() != sequence.length()) throw InvalidArgument("patch stability: stylizer dropped frames");

  Rng rng(protocol.seed);
  StabilityScore score;
  const long S = static_cast<long>(protocol.search);
  for (std::size_t t = 0; t + 1 < sequence.length(); ++t) {
    bool found = false;
    PatchMatch best;
    for (std::size_t attempt = 0; attempt < protocol.candidates && !found; ++attempt) {
      const std::size_t y = rng.index(H - P + 1), x = rng.index(W - P + 1);
      if (touches_foreground(fg_at(t), y, x, P)) continue;
      const Tensor ref = crop(sequence.frames[t], y, x, P, P);
      double best_psnr = -std::numeric_limits<double>::infinity();
      for (long dy = -S; dy <= S; ++dy)
        for (long dx = -S; dx <= S; ++dx) {
          const long ny = static_cast<long>(y) + dy, nx = static_cast<long>(x) + dx;
          if (ny < 0 || nx < 0 || ny + static_cast<long>(P) > static_cast<long>(H) ||
              nx + static_cast<long>(P) > static_cast<long>(W)) {
            continue;
          }
          if (touches_foreground(fg_at(t + 1), ny, nx, P)) continue;
          const double q = psnr(ref, crop(sequence.frames[t + 1], ny, nx, P, P));
          if (q > best_psnr) {
            best_psnr = q;
            best.dy = dy;
            best.dx = dx;
            found = true;
          }
        }
      best.y = y;
      best.x = x;
    }
    if (!found) throw InvalidArgument("patch stability: no background patch available in pair " + std::to_string(t));
    best.pair = t;
    const Tensor a = crop(styled[t], best.y, best.x, P, P);
    const Tensor b = crop(styled[t + 1], best.y + best.dy, best.x + best.dx, P, P);
    best.psnr = psnr(a, b);
    best.ssim = P >= 11 ? ssim(a, b) : 1.0 - mse(a, b);
    score.matches.push_back(best);
  }
  for (const auto& m : score.matches) {
    score.mean_psnr += m.psnr;
    score.mean_ssim += m.ssim;
  }
  score.mean_psnr /= static_cast<double>(score.matches.size());
  score.mean_ssim /= static_cast<double>(score.matches.size());
  return score;
}

namespace {

Tensor resize_nearest(const Tensor& img, std::size_t H, std::size_t W) {
  const std::size_t C = img.dim(0), h = img.dim(1), w = img.dim(2);
  std::vector<double> out(C * H * W);
  auto src = img.values();
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) out[(c * H + y) * W + x] = src[(c * h + y * h / H) * w + x * w / W];
  return Tensor({C, H, W}, std::move(out));
}

template <class F>
double median_seconds(std::size_t repeats, F&& f) {
  f(0);  // warm-up
  std::vector<double> t;
  for (std::size_t i = 1; i <= repeats; ++i) {
    const auto start = std::chrono::steady_clock::now();
    f(i);
    t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  std::sort(t.begin(), t.end());
  return t.size() % 2 ? t[t.size() / 2] : 0.5 * (t[t.size() / 2 - 1] + t[t.size() / 2]);
}

}  // namespace

std::vector<TimingRow> timing(const RecurrentStylizer& model, const FeatureNet& net, const Tensor& style,
                              const OptimConfig& optim, const TimingOptions& options) {
  if (options.repeats < 3) throw InvalidArgument("timing: need at least 3 repeats");
  std::vector<TimingRow> rows;
  Rng rng(options.seed);
  for (std::size_t res : options.resolutions) {
    // One distinct frame per run, the first being the warm-up.
    std::vector<Tensor> frames;
    for (std::size_t i = 0; i <= options.repeats; ++i) frames.push_back(procedural_texture(3, res, res, rng));
    TimingRow row;
    row.resolution = res;
    row.feedforward_seconds = median_seconds(options.repeats, [&](std::size_t i) {
      NoGradGuard no_grad;
      return model.forward_step(frames[i], frames[i]);
    });
    if (res <= options.optim_max_resolution) {
      const PerceptualObjective objective(net, resize_nearest(style, res, res));
      OptimConfig cfg = optim;
      cfg.iters = options.optim_iters;
      row.optim_seconds = median_seconds(options.repeats, [&](std::size_t i) {
        return stylize_image_optim(objective, frames[i], cfg);
      });
      row.speedup = *row.optim_seconds / row.feedforward_seconds;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace sst::eval
