#pragma once

#include <cstddef>

#include "stablestyle/autodiff/tensor.hpp"

// Differentiable primitives. Image-like tensors are rank 3: [C, H, W].
namespace sst::ops {

// Zero-padded 2-D convolution. weight is [C_out, C_in, k, k], bias [C_out].
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t pad);

// Per-channel normalization with population variance.
Tensor instance_norm(const Tensor& x, double eps = 1e-5);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double alpha);

// Multiplies every channel of x [C,H,W] by mask [1,H,W] (or [H,W]).
Tensor mul_channels(const Tensor& x, const Tensor& mask);

Tensor concat_channels(const Tensor& a, const Tensor& b);
Tensor upsample_nearest2x(const Tensor& x);
Tensor avg_pool2x2(const Tensor& x);

Tensor reshape(const Tensor& x, Shape shape);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor sum(const Tensor& x);
Tensor sum_squares(const Tensor& x);
// sum((a - b)^2) without materializing the difference.
Tensor squared_distance(const Tensor& a, const Tensor& b);

struct ResidualWeights {
  Tensor conv1_weight, conv1_bias;
  Tensor conv2_weight, conv2_bias;
};

// conv -> instance norm -> relu -> conv -> instance norm, plus the skip path.
Tensor residual_block(const Tensor& x, const ResidualWeights& w, double eps = 1e-5);

}  // namespace sst::ops
