#include "stablestyle/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "stablestyle/errors.hpp"

namespace sst::eval {

double mse(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw InvalidArgument("mse: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  auto av = a.values(), bv = b.values();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += (av[i] - bv[i]) * (av[i] - bv[i]);
  return s / static_cast<double>(av.size());
}

double psnr(const Tensor& a, const Tensor& b, double peak) {
  if (!(peak > 0)) throw InvalidArgument("psnr: peak must be positive");
  const double e = mse(a, b);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / e);
}

double ssim(const Tensor& a, const Tensor& b, const SsimOptions& o) {
  if (a.shape() != b.shape() || a.rank() != 3) throw InvalidArgument("ssim: images must share a [C,H,W] shape");
  const std::size_t C = a.dim(0), H = a.dim(1), W = a.dim(2), k = o.window;
  if (H < k || W < k) throw InvalidArgument("ssim: image smaller than the " + std::to_string(k) + "px window");

  std::vector<double> g(k);
  const double mid = static_cast<double>(k - 1) / 2.0;
  for (std::size_t i = 0; i < k; ++i) g[i] = std::exp(-(i - mid) * (i - mid) / (2.0 * o.sigma * o.sigma));
  const double gsum = std::accumulate(g.begin(), g.end(), 0.0);
  for (auto& v : g) v /= gsum;

  const double c1 = (o.k1 * o.dynamic_range) * (o.k1 * o.dynamic_range);
  const double c2 = (o.k2 * o.dynamic_range) * (o.k2 * o.dynamic_range);
  const std::size_t Ho = H - k + 1, Wo = W - k + 1;

  // Separable "valid" Gaussian filtering of a plane.
  auto filter = [&](const std::vector<double>& src) {
    std::vector<double> tmp(H * Wo), out(Ho * Wo);
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < Wo; ++x) {
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) s += g[i] * src[y * W + x + i];
        tmp[y * Wo + x] = s;
      }
    for (std::size_t y = 0; y < Ho; ++y)
      for (std::size_t x = 0; x < Wo; ++x) {
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) s += g[i] * tmp[(y + i) * Wo + x];
        out[y * Wo + x] = s;
      }
    return out;
  };

  double total = 0.0;
  auto av = a.values(), bv = b.values();
  for (std::size_t c = 0; c < C; ++c) {
    std::vector<double> x(av.begin() + c * H * W, av.begin() + (c + 1) * H * W);
    std::vector<double> y(bv.begin() + c * H * W, bv.begin() + (c + 1) * H * W);
    std::vector<double> xx(H * W), yy(H * W), xy(H * W);
    for (std::size_t i = 0; i < H * W; ++i) {
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter(x), my = filter(y), sxx = filter(xx), syy = filter(yy), sxy = filter(xy);
    double acc = 0.0;
    for (std::size_t i = 0; i < Ho * Wo; ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cxy = sxy[i] - mx[i] * my[i];
      acc += ((2 * mx[i] * my[i] + c1) * (2 * cxy + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    total += acc / static_cast<double>(Ho * Wo);
  }
  return total / static_cast<double>(C);
}

double instability(std::span<const Tensor> frames) {
  if (frames.size() < 2) throw InvalidArgument("instability: need at least two frames");
  double s = 0.0;
  for (std::size_t t = 0; t + 1 < frames.size(); ++t) s += mse(frames[t], frames[t + 1]);
  return s / static_cast<double>(frames.size() - 1);
}

namespace {
std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto i, auto j) { return v[i] < v[j]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}
}  // namespace

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidArgument("spearman: length mismatch");
  if (x.size() < 2) return std::nullopt;
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

Tensor crop(const Tensor& image, std::size_t y0, std::size_t x0, std::size_t h, std::size_t w) {
  if (image.rank() != 3 || y0 + h > image.dim(1) || x0 + w > image.dim(2)) {
    throw InvalidArgument("crop: window outside image " + shape_str(image.shape()));
  }
  const std::size_t C = image.dim(0), H = image.dim(1), W = image.dim(2);
  std::vector<double> out(C * h * w);
  auto src = image.values();
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) out[(c * h + y) * w + x] = src[(c * H + y0 + y) * W + x0 + x];
  (void)H;
  return Tensor({C, h, w}, std::move(out));
}

}  // namespace sst::eval
