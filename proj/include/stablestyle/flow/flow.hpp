#pragma once

#include <cstddef>
#include <vector>

#include "stablestyle/autodiff/tensor.hpp"

namespace sst {

// Per-pixel displacement (u, v) in pixels, defined on the grid of frame t-1:
// pixel (x, y) of frame t-1 corresponds to (x + u, y + v) in frame t.
struct FlowField {
  std::size_t height = 0, width = 0;
  std::vector<double> u, v;

  static FlowField zeros(std::size_t height, std::size_t width);
  static FlowField constant(std::size_t height, std::size_t width, double u, double v);

  double u_at(std::size_t y, std::size_t x) const { return u[y * width + x]; }
  double v_at(std::size_t y, std::size_t x) const { return v[y * width + x]; }

  // Finite values and |u| < W, |v| < H.
  void validate() const;
};

// Weights in [0, 1]; 0 marks occlusions and motion boundaries.
struct OcclusionMask {
  std::size_t height = 0, width = 0;
  std::vector<double> m;

  static OcclusionMask ones(std::size_t height, std::size_t width);
  static OcclusionMask zeros(std::size_t height, std::size_t width);
  double at(std::size_t y, std::size_t x) const { return m[y * width + x]; }
  void clamp();
  // [1, H, W] constant tensor.
  Tensor as_tensor() const;
};

// out(c, y, x) = bilinear sample of frame at (x + u(y,x), y + v(y,x)) with
// clamp-to-edge borders. Differentiable w.r.t. frame only.
Tensor bilinear_warp(const Tensor& frame, const FlowField& flow);

// (1/HW) * sum_c ||m * p_prev - m * warp(p_t)||^2.
Tensor temporal_loss(const Tensor& p_prev, const Tensor& p_t, const FlowField& flow,
                     const OcclusionMask& mask);

// Forward-backward consistency: 0 where
// |w_f(x) + w_b(x + w_f(x))|^2 > theta * (|w_f|^2 + |w_b|^2) + theta.
OcclusionMask occlusion_from_flows(const FlowField& forward, const FlowField& backward,
                                   double theta);

}  // namespace sst
