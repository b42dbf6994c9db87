#include <cmath>
#include <limits>

#include "doctest.h"
#include "stablestyle/autodiff/rng.hpp"
#include "stablestyle/errors.hpp"
#include "stablestyle/eval/metrics.hpp"
#include "stablestyle/flow/synthetic.hpp"

using namespace sst;
using namespace sst::eval;

namespace {

// Direct 2-D windowed SSIM, no separability.
double ssim_reference(const Tensor& a, const Tensor& b) {
  const std::size_t C = a.dim(0), H = a.dim(1), W = a.dim(2), k = 11;
  std::vector<double> w(k * k);
  double wsum = 0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      const double di = static_cast<double>(i) - 5.0, dj = static_cast<double>(j) - 5.0;
      w[i * k + j] = std::exp(-(di * di + dj * dj) / (2 * 1.5 * 1.5));
      wsum += w[i * k + j];
    }
  for (auto& v : w) v /= wsum;
  const double c1 = 1e-4, c2 = 9e-4;
  double total = 0;
  for (std::size_t c = 0; c < C; ++c) {
    double acc = 0;
    for (std::size_t y = 0; y + k <= H; ++y)
      for (std::size_t x = 0; x + k <= W; ++x) {
        double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
        for (std::size_t i = 0; i < k; ++i)
          for (std::size_t j = 0; j < k; ++j) {
            const double g = w[i * k + j], p = a.at(c, y + i, x + j), q = b.at(c, y + i, x + j);
            mx += g * p;
            my += g * q;
            sxx += g * p * p;
            syy += g * q * q;
            sxy += g * p * q;
          }
        const double vx = sxx - mx * mx, vy = syy - my * my, cxy = sxy - mx * my;
        acc += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      }
    total += acc / static_cast<double>((H - k + 1) * (W - k + 1));
  }
  return total / static_cast<double>(C);
}

Tensor binary_image(std::size_t H, std::size_t W, Rng& rng) {
  std::vector<double> v(3 * H * W);
  for (auto& x : v) x = rng.coin() ? 1.0 : 0.0;
  return Tensor({3, H, W}, v);
}

}  // namespace

TEST_CASE("psnr examples and symmetry") {
  Rng rng(1);
  Tensor a = random_uniform({3, 4, 4}, rng);
  CHECK(psnr(a, a) == std::numeric_limits<double>::infinity());
  CHECK(psnr(Tensor::zeros({1, 2, 2}), Tensor::full({1, 2, 2}, 0.1)) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(psnr(Tensor::zeros({1, 2, 2}), Tensor::full({1, 2, 2}, 1.0)) == 0.0);
  Tensor b = random_uniform({3, 4, 4}, rng);
  CHECK(psnr(a, b) == psnr(b, a));
  CHECK_THROWS_AS(psnr(a, b, 0.0), InvalidArgument);
  CHECK_THROWS_AS(psnr(a, Tensor::zeros({3, 4, 5})), InvalidArgument);
}

TEST_CASE("ssim examples") {
  Rng rng(2);
  Tensor a = binary_image(16, 16, rng);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-14));
  std::vector<double> inv(a.numel());
  for (std::size_t i = 0; i < inv.size(); ++i) inv[i] = 1.0 - a.values()[i];
  CHECK(ssim(a, Tensor(a.shape(), inv)) < 0.0);

  Tensor t = procedural_texture(3, 24, 24, rng);
  std::vector<double> shifted(t.numel());
  for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] = t.values()[i] + 0.02;
  CHECK(ssim(t, Tensor(t.shape(), shifted)) > 0.9);
  CHECK_THROWS_AS(ssim(Tensor::zeros({3, 10, 20}), Tensor::zeros({3, 10, 20})), InvalidArgument);
}

TEST_CASE("ssim matches a direct windowed computation and is symmetric") {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor a = random_uniform({3, 14, 17}, rng), b = random_uniform({3, 14, 17}, rng);
    const double s = ssim(a, b);
    CHECK(std::abs(s - ssim_reference(a, b)) < 1e-12);
    CHECK(std::abs(s - ssim(b, a)) < 1e-12);
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
  }
}

TEST_CASE("instability examples") {
  Rng rng(4);
  Tensor a = random_uniform({3, 4, 4}, rng), b = random_uniform({3, 4, 4}, rng);
  std::vector<Tensor> same{a, a, a};
  CHECK(instability(same) == 0.0);
  std::vector<Tensor> two{Tensor({1, 1, 1}, {0.0}), Tensor({1, 1, 1}, {0.5})};
  CHECK(instability(two) == 0.25);
  std::vector<Tensor> aba{a, b, a};
  CHECK(instability(aba) == doctest::Approx(mse(a, b)).epsilon(1e-15));
  std::vector<Tensor> one{a};
  CHECK_THROWS_AS(instability(one), InvalidArgument);
}

TEST_CASE("instability is invariant under frame-order reversal") {
  Rng rng(5);
  std::vector<Tensor> f;
  for (int i = 0; i < 6; ++i) f.push_back(random_uniform({2, 3, 3}, rng));
  std::vector<Tensor> r(f.rbegin(), f.rend());
  CHECK(instability(f) == doctest::Approx(instability(r)).epsilon(1e-15));
}

TEST_CASE("spearman examples") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  CHECK(*spearman(x, std::vector<double>{2, 4, 9, 16, 100}) == doctest::Approx(1.0));
  CHECK(*spearman(x, std::vector<double>{5, 4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK_FALSE(spearman(x, std::vector<double>{3, 3, 3, 3, 3}).has_value());
  CHECK_FALSE(spearman(std::vector<double>{7, 7, 7}, std::vector<double>{1, 2, 3}).has_value());
  // Ties take the average rank: ranks (1.5, 1.5, 3) vs (1, 2, 3).
  CHECK(*spearman(std::vector<double>{1, 1, 2}, std::vector<double>{1, 2, 3}) ==
        doctest::Approx(std::sqrt(3.0) / 2.0));
  CHECK_THROWS_AS(spearman(x, std::vector<double>{1, 2}), InvalidArgument);
}

TEST_CASE("crop bounds") {
  Tensor t({1, 3, 3}, {0, 1, 2, 3, 4, 5, 6, 7, 8});
  Tensor c = crop(t, 1, 1, 2, 2);
  CHECK(std::vector<double>(c.values().begin(), c.values().end()) == std::vector<double>{4, 5, 7, 8});
  CHECK_THROWS_AS(crop(t, 2, 0, 2, 2), InvalidArgument);
}
