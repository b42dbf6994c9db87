#pragma once

#include <optional>
#include <span>
#include <vector>

#include "stablestyle/autodiff/tensor.hpp"

namespace sst::eval {

double mse(const Tensor& a, const Tensor& b);

// 10 log10(peak^2 / MSE); +infinity when the images are identical.
double psnr(const Tensor& a, const Tensor& b, double peak = 1.0);

struct SsimOptions {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

// Mean SSIM over all valid window positions, averaged over channels.
// Requires min(H, W) >= window.
double ssim(const Tensor& a, const Tensor& b, const SsimOptions& options = {});

// Mean over t of MSE(p_t, p_{t+1}); needs at least two frames.
double instability(std::span<const Tensor> frames);

// Spearman rank correlation with average ranks for ties; nullopt when either
// ranking has zero variance.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

// Sub-image [C, h, w] starting at (y0, x0).
Tensor crop(const Tensor& image, std::size_t y0, std::size_t x0, std::size_t h, std::size_t w);

}  // namespace sst::eval
