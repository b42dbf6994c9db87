#include <cmath>

#include "doctest.h"
#include "stablestyle/autodiff/gradcheck.hpp"
#include "stablestyle/autodiff/ops.hpp"
#include "stablestyle/autodiff/rng.hpp"
#include "stablestyle/errors.hpp"
#include "stablestyle/flow/flow.hpp"
#include "stablestyle/flow/synthetic.hpp"

using namespace sst;

namespace {

FlowField random_flow(std::size_t H, std::size_t W, Rng& rng, double amp) {
  FlowField f = FlowField::zeros(H, W);
  for (auto& u : f.u) u = rng.uniform(-amp, amp);
  for (auto& v : f.v) v = rng.uniform(-amp, amp);
  return f;
}

OcclusionMask random_mask(std::size_t H, std::size_t W, Rng& rng) {
  OcclusionMask m = OcclusionMask::ones(H, W);
  for (auto& v : m.m) v = rng.uniform();
  return m;
}

}  // namespace

TEST_CASE("zero flow warp is the identity") {
  Rng rng(1);
  Tensor f = random_uniform({3, 5, 7}, rng);
  Tensor w = bilinear_warp(f, FlowField::zeros(5, 7));
  for (std::size_t i = 0; i < f.numel(); ++i) CHECK(w.values()[i] == f.values()[i]);
}

TEST_CASE("integer flows match an index-shift reference on in-bounds samples") {
  Rng rng(2);
  Tensor f = random_uniform({2, 6, 8}, rng);
  for (int du = -2; du <= 2; ++du)
    for (int dv = -2; dv <= 2; ++dv) {
      Tensor w = bilinear_warp(f, FlowField::constant(6, 8, du, dv));
      for (std::size_t c = 0; c < 2; ++c)
        for (long y = 0; y < 6; ++y)
          for (long x = 0; x < 8; ++x) {
            const long sx = x + du, sy = y + dv;
            if (sx < 0 || sy < 0 || sx >= 8 || sy >= 6) continue;
            CHECK(w.at(c, y, x) == f.at(c, sy, sx));
          }
    }
}

TEST_CASE("half-pixel flow on a horizontal ramp averages neighbours") {
  std::vector<double> v(6 * 6);
  for (std::size_t y = 0; y < 6; ++y)
    for (std::size_t x = 0; x < 6; ++x) v[y * 6 + x] = 0.1 * static_cast<double>(x);
  Tensor ramp({1, 6, 6}, v);
  Tensor w = bilinear_warp(ramp, FlowField::constant(6, 6, 0.5, 0.0));
  for (std::size_t y = 0; y < 6; ++y)
    for (std::size_t x = 0; x + 1 < 6; ++x)
      CHECK(w.at(0, y, x) == doctest::Approx(0.5 * (ramp.at(0, y, x) + ramp.at(0, y, x + 1))).epsilon(1e-14));
}

TEST_CASE("warp is linear in the frame") {
  Rng rng(3);
  Tensor a = random_uniform({3, 6, 6}, rng), b = random_uniform({3, 6, 6}, rng);
  FlowField flow = random_flow(6, 6, rng, 2.5);
  const double alpha = 0.7, beta = -1.9;
  Tensor lhs = bilinear_warp(ops::add(ops::scale(a, alpha), ops::scale(b, beta)), flow);
  Tensor wa = bilinear_warp(a, flow), wb = bilinear_warp(b, flow);
  for (std::size_t i = 0; i < a.numel(); ++i)
    CHECK(std::abs(lhs.values()[i] - (alpha * wa.values()[i] + beta * wb.values()[i])) < 1e-12);
}

TEST_CASE("warp rejects mismatched extents") {
  CHECK_THROWS_AS(bilinear_warp(Tensor::zeros({3, 4, 4}), FlowField::zeros(4, 5)), InvalidArgument);
}

TEST_CASE("flow field validation") {
  CHECK_NOTHROW(FlowField::constant(4, 5, 4.5, -3.5).validate());
  CHECK_THROWS_AS(FlowField::constant(4, 5, 5.0, 0.0).validate(), InvalidArgument);
  FlowField bad = FlowField::zeros(2, 2);
  bad.u[0] = std::nan("");
  CHECK_THROWS_AS(bad.validate(), NumericError);
}

TEST_CASE("temporal loss examples") {
  Rng rng(4);
  Tensor a = random_uniform({3, 5, 5}, rng), b = random_uniform({3, 5, 5}, rng);
  CHECK(temporal_loss(a, b, random_flow(5, 5, rng, 1.0), OcclusionMask::zeros(5, 5)).item() == 0.0);
  CHECK(temporal_loss(a, a, FlowField::zeros(5, 5), OcclusionMask::ones(5, 5)).item() == 0.0);
  const double v = temporal_loss(Tensor({1, 1, 1}, {0.2}), Tensor({1, 1, 1}, {0.5}), FlowField::zeros(1, 1),
                                 OcclusionMask::ones(1, 1))
                       .item();
  CHECK(v == doctest::Approx(0.09).epsilon(1e-12));
}

TEST_CASE("temporal loss uses 1/(HW) and sums channels") {
  Tensor a = Tensor::full({3, 2, 2}, 1.0), b = Tensor::zeros({3, 2, 2});
  // 12 unit squared differences over 4 pixels.
  CHECK(temporal_loss(a, b, FlowField::zeros(2, 2), OcclusionMask::ones(2, 2)).item() == 3.0);
}

TEST_CASE("zeroing mask pixels never increases the temporal loss") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor a = random_uniform({3, 6, 6}, rng), b = random_uniform({3, 6, 6}, rng);
    FlowField flow = random_flow(6, 6, rng, 2.0);
    OcclusionMask mask = random_mask(6, 6, rng);
    double prev = temporal_loss(a, b, flow, mask).item();
    for (int k = 0; k < 36; ++k) {
      mask.m[rng.index(36)] = 0.0;
      const double cur = temporal_loss(a, b, flow, mask).item();
      CHECK(cur <= prev);
      prev = cur;
    }
  }
}

TEST_CASE("temporal loss gradients pass finite differences through the warp") {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor prev = random_uniform({3, 6, 6}, rng, 0.0, 1.0, true);
    Tensor cur = random_uniform({3, 6, 6}, rng, 0.0, 1.0, true);
    FlowField flow = random_flow(6, 6, rng, 1.5);
    OcclusionMask mask = random_mask(6, 6, rng);
    CHECK(check_gradients([&] { return temporal_loss(prev, cur, flow, mask); }, {prev, cur}).relative_error < 1e-4);
  }
}

TEST_CASE("occlusion from flows examples") {
  Rng rng(7);
  FlowField fwd = FlowField::constant(6, 6, 1.5, -0.5);
  FlowField bwd = FlowField::constant(6, 6, -1.5, 0.5);
  for (double v : occlusion_from_flows(fwd, bwd, 0.01).m) CHECK(v == 1.0);
  FlowField large = FlowField::constant(6, 6, 4.0, 3.0);
  for (double v : occlusion_from_flows(large, FlowField::zeros(6, 6), 0.01).m) CHECK(v == 0.0);
  CHECK_THROWS_AS(occlusion_from_flows(fwd, bwd, 0.0), InvalidArgument);
}

TEST_CASE("static scene without noise is constant with zero flow and full mask") {
  auto seq = synthetic_scene(SceneKind::StaticNoise, {0.0, 0, 0, 16}, 4, 16, 16, 1);
  REQUIRE(seq.length() == 4);
  for (std::size_t t = 1; t < 4; ++t) {
    for (std::size_t i = 0; i < seq.frames[0].numel(); ++i) CHECK(seq.frames[t].values()[i] == seq.frames[0].values()[i]);
    for (double u : seq.flows[t - 1].u) CHECK(u == 0.0);
    for (double m : seq.masks[t - 1].m) CHECK(m == 1.0);
  }
  for (double v : seq.frames[0].values()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("global translate: warping frame t reproduces frame t-1 on the mask") {
  for (int dx : {1, -2})
    for (int dy : {0, 1}) {
      auto seq = synthetic_scene(SceneKind::GlobalTranslate, {0.0, dx, dy, 16}, 5, 16, 20, 2);
      for (std::size_t t = 1; t < 5; ++t) {
        Tensor w = bilinear_warp(seq.frames[t], seq.flows[t - 1]);
        const auto& m = seq.masks[t - 1];
        std::size_t covered = 0;
        for (std::size_t c = 0; c < 3; ++c)
          for (std::size_t y = 0; y < 16; ++y)
            for (std::size_t x = 0; x < 20; ++x) {
              if (m.at(y, x) != 1.0) continue;
              ++covered;
              CHECK(w.at(c, y, x) == seq.frames[t - 1].at(c, y, x));
            }
        CHECK(covered > 0);
      }
    }
}

TEST_CASE("moving square: ground truth is consistent under the temporal loss") {
  auto seq = synthetic_scene(SceneKind::MovingSquare, {0.0, 2, 1, 10}, 6, 32, 40, 3);
  REQUIRE(seq.foreground.size() == 6);
  for (std::size_t t = 1; t < 6; ++t) {
    CHECK(temporal_loss(seq.frames[t - 1], seq.frames[t], seq.flows[t - 1], seq.masks[t - 1]).item() < 1e-12);
  }
}

TEST_CASE("consistency check agrees with the generator's mask on moving squares") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto seq = synthetic_scene(SceneKind::MovingSquare, {0.0, 2, 1, 16}, 4, 64, 96, seed);
    for (std::size_t t = 0; t + 1 < seq.length(); ++t) {
      OcclusionMask est = occlusion_from_flows(seq.flows[t], seq.backward_flows[t], 0.01);
      std::size_t agree = 0;
      for (std::size_t i = 0; i < est.m.size(); ++i) agree += (est.m[i] == seq.masks[t].m[i]);
      CHECK(static_cast<double>(agree) / static_cast<double>(est.m.size()) >= 0.95);
    }
  }
}

TEST_CASE("scene generation is seeded and validates its arguments") {
  auto a = synthetic_scene(SceneKind::StaticNoise, {0.05, 0, 0, 16}, 3, 8, 8, 9);
  auto b = synthetic_scene(SceneKind::StaticNoise, {0.05, 0, 0, 16}, 3, 8, 8, 9);
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t i = 0; i < a.frames[t].numel(); ++i) CHECK(a.frames[t].values()[i] == b.frames[t].values()[i]);
  CHECK_THROWS_AS(synthetic_scene(SceneKind::StaticNoise, {}, 1, 8, 8, 0), InvalidArgument);
  CHECK_THROWS_AS(synthetic_scene(SceneKind::GlobalTranslate, {0.0, 9, 0, 16}, 3, 8, 8, 0), InvalidArgument);
  CHECK_THROWS_AS(synthetic_scene(SceneKind::MovingSquare, {0.0, 4, 0, 16}, 4, 16, 20, 0), InvalidArgument);
  CHECK(parse_scene_kind(scene_kind_name(SceneKind::MovingSquare)) == SceneKind::MovingSquare);
  CHECK_THROWS_AS(parse_scene_kind("spiral"), InvalidArgument);
}

TEST_CASE("sequence validation and slicing") {
  auto seq = synthetic_scene(SceneKind::GlobalTranslate, {0.0, 1, 0, 16}, 5, 8, 8, 4);
  auto part = seq.slice(1, 3);
  CHECK(part.length() == 3);
  CHECK(part.flows.size() == 2);
  CHECK(part.masks.size() == 2);
  CHECK_THROWS_AS(seq.slice(4, 2), InvalidArgument);
  seq.masks.pop_back();
  CHECK_THROWS_AS(seq.validate(), InvalidArgument);
}
