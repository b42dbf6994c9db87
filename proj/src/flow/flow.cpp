#include "stablestyle/flow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "stablestyle/autodiff/ops.hpp"
#include "stablestyle/errors.hpp"

namespace sst {

FlowField FlowField::zeros(std::size_t height, std::size_t width) {
  return constant(height, width, 0.0, 0.0);
}

FlowField FlowField::constant(std::size_t height, std::size_t width, double u, double v) {
  FlowField f;
  f.height = height;
  f.width = width;
  f.u.assign(height * width, u);
  f.v.assign(height * width, v);
  return f;
}

void FlowField::validate() const {
  if (height == 0 || width == 0) throw InvalidArgument("flow field: empty extent");
  if (u.size() != height * width || v.size() != height * width) {
    throw InvalidArgument("flow field: component size does not match extent");
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!std::isfinite(u[i]) || !std::isfinite(v[i])) throw NumericError("flow field: non-finite value");
    if (std::abs(u[i]) >= static_cast<double>(width) || std::abs(v[i]) >= static_cast<double>(height)) {
      throw InvalidArgument("flow field: displacement exceeds frame size");
    }
  }
}

OcclusionMask OcclusionMask::ones(std::size_t height, std::size_t width) {
  return {height, width, std::vector<double>(height * width, 1.0)};
}

OcclusionMask OcclusionMask::zeros(std::size_t height, std::size_t width) {
  return {height, width, std::vector<double>(height * width, 0.0)};
}

void OcclusionMask::clamp() {
  for (auto& x : m) x = std::clamp(x, 0.0, 1.0);
}

Tensor OcclusionMask::as_tensor() const { return Tensor({1, height, width}, m); }

namespace {

struct Tap {
  std::size_t i00, i01, i10, i11;
  double w00, w01, w10, w11;
};

// Bilinear taps for a sample point clamped into [0, W-1] x [0, H-1].
Tap bilinear_tap(double sx, double sy, std::size_t H, std::size_t W) {
  sx = std::clamp(sx, 0.0, static_cast<double>(W - 1));
  sy = std::clamp(sy, 0.0, static_cast<double>(H - 1));
  const auto x0 = static_cast<std::size_t>(std::floor(sx));
  const auto y0 = static_cast<std::size_t>(std::floor(sy));
  const std::size_t x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1);
  const double fx = sx - static_cast<double>(x0), fy = sy - static_cast<double>(y0);
  return {y0 * W + x0, y0 * W + x1, y1 * W + x0, y1 * W + x1,
          (1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
}

}  // namespace

Tensor bilinear_warp(const Tensor& frame, const FlowField& flow) {
  if (frame.rank() != 3 || frame.dim(1) != flow.height || frame.dim(2) != flow.width) {
    throw InvalidArgument("bilinear_warp: frame " + shape_str(frame.shape()) +
                          " does not match flow extent");
  }
  const std::size_t C = frame.dim(0), H = flow.height, W = flow.width, HW = H * W;
  auto taps = std::make_shared<std::vector<Tap>>(HW);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) {
      const std::size_t i = y * W + x;
      (*taps)[i] = bilinear_tap(static_cast<double>(x) + flow.u[i], static_cast<double>(y) + flow.v[i], H, W);
    }
  auto in = frame.values();
  std::vector<double> out(C * HW);
  for (std::size_t c = 0; c < C; ++c) {
    const double* src = in.data() + c * HW;
    for (std::size_t i = 0; i < HW; ++i) {
      const Tap& t = (*taps)[i];
      // Zero-weight taps are skipped so integer flows reproduce values exactly.
      double acc = t.w00 * src[t.i00];
      if (t.w01 != 0.0) acc += t.w01 * src[t.i01];
      if (t.w10 != 0.0) acc += t.w10 * src[t.i10];
      if (t.w11 != 0.0) acc += t.w11 * src[t.i11];
      out[c * HW + i] = acc;
    }
  }
  return detail::make_result(frame.shape(), std::move(out), {frame}, [C, HW, taps](detail::Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    auto& g = n.inputs[0]->grad_buffer();
    for (std::size_t c = 0; c < C; ++c) {
      double* dst = g.data() + c * HW;
      const double* dy = n.grad.data() + c * HW;
      for (std::size_t i = 0; i < HW; ++i) {
        const Tap& t = (*taps)[i];
        dst[t.i00] += t.w00 * dy[i];
        dst[t.i01] += t.w01 * dy[i];
        dst[t.i10] += t.w10 * dy[i];
        dst[t.i11] += t.w11 * dy[i];
      }
    }
  });
}

Tensor temporal_loss(const Tensor& p_prev, const Tensor& p_t, const FlowField& flow,
                     const OcclusionMask& mask) {
  if (p_prev.shape() != p_t.shape()) throw InvalidArgument("temporal_loss: frame shapes differ");
  if (mask.height != flow.height || mask.width != flow.width) {
    throw InvalidArgument("temporal_loss: mask and flow extents differ");
  }
  const Tensor m = mask.as_tensor();
  const Tensor warped = bilinear_warp(p_t, flow);
  const Tensor d = ops::squared_distance(ops::mul_channels(p_prev, m), ops::mul_channels(warped, m));
  return ops::scale(d, 1.0 / static_cast<double>(flow.height * flow.width));
}

OcclusionMask occlusion_from_flows(const FlowField& forward, const FlowField& backward, double theta) {
  if (!(theta > 0)) throw InvalidArgument("occlusion_from_flows: theta must be positive");
  if (forward.height != backward.height || forward.width != backward.width) {
    throw InvalidArgument("occlusion_from_flows: flow extents differ");
  }
  const std::size_t H = forward.height, W = forward.width;
  OcclusionMask mask = OcclusionMask::ones(H, W);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) {
      const std::size_t i = y * W + x;
      const double fu = forward.u[i], fv = forward.v[i];
      const Tap t = bilinear_tap(static_cast<double>(x) + fu, static_cast<double>(y) + fv, H, W);
      const double bu = t.w00 * backward.u[t.i00] + t.w01 * backward.u[t.i01] +
                        t.w10 * backward.u[t.i10] + t.w11 * backward.u[t.i11];
      const double bv = t.w00 * backward.v[t.i00] + t.w01 * backward.v[t.i01] +
                        t.w10 * backward.v[t.i10] + t.w11 * backward.v[t.i11];
      const double du = fu + bu, dv = fv + bv;
      const double lhs = du * du + dv * dv;
      const double rhs = theta * (fu * fu + fv * fv + bu * bu + bv * bv) + theta;
      if (lhs > rhs) mask.m[i] = 0.0;
    }
  return mask;
}

}  // namespace sst
