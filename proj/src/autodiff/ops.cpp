#include "stablestyle/autodiff/ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <memory>

#include "stablestyle/errors.hpp"

namespace sst::ops {

using detail::make_result;
using detail::Node;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw InvalidArgument(std::string(op) + ": expected rank " + std::to_string(rank) +
                          ", got shape " + shape_str(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw InvalidArgument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                          shape_str(b.shape()));
  }
}

bool wants(const Node& n, std::size_t i) { return n.inputs[i]->requires_grad; }
std::vector<double>& gbuf(Node& n, std::size_t i) { return n.inputs[i]->grad_buffer(); }

// Lays out [C*k*k, Ho*Wo] patches of a zero-padded [C,H,W] input.
void im2col(const double* in, std::size_t C, std::size_t H, std::size_t W, std::size_t k,
            std::size_t stride, std::size_t pad, std::size_t Ho, std::size_t Wo, double* cols) {
  const auto iH = static_cast<std::ptrdiff_t>(H);
  const auto iW = static_cast<std::ptrdiff_t>(W);
  std::size_t row = 0;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx, ++row) {
        double* dst = cols + row * Ho * Wo;
        for (std::size_t oy = 0; oy < Ho; ++oy) {
          const auto y = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
          for (std::size_t ox = 0; ox < Wo; ++ox) {
            const auto x = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(pad);
            *dst++ = (y >= 0 && y < iH && x >= 0 && x < iW) ? in[(c * H + y) * W + x] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const double* cols, std::size_t C, std::size_t H, std::size_t W, std::size_t k,
                std::size_t stride, std::size_t pad, std::size_t Ho, std::size_t Wo, double* out) {
  const auto iH = static_cast<std::ptrdiff_t>(H);
  const auto iW = static_cast<std::ptrdiff_t>(W);
  std::size_t row = 0;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx, ++row) {
        const double* src = cols + row * Ho * Wo;
        for (std::size_t oy = 0; oy < Ho; ++oy) {
          const auto y = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
          for (std::size_t ox = 0; ox < Wo; ++ox, ++src) {
            const auto x = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(pad);
            if (y >= 0 && y < iH && x >= 0 && x < iW) out[(c * H + y) * W + x] += *src;
          }
        }
      }
    }
  }
}

template <class F, class D>
Tensor unary(const Tensor& x, F f, D dfdx) {
  auto in = x.values();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  return make_result(x.shape(), std::move(out), {x}, [dfdx](Node& n) {
    if (!wants(n, 0)) return;
    const auto& xin = n.inputs[0]->value;
    auto& g = gbuf(n, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * dfdx(xin[i], n.value[i]);
  });
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t pad) {
  require_rank(input, 3, "conv2d");
  require_rank(weight, 4, "conv2d");
  const std::size_t C = input.dim(0), H = input.dim(1), W = input.dim(2);
  const std::size_t Co = weight.dim(0), k = weight.dim(2);
  if (weight.dim(1) != C) {
    throw InvalidArgument("conv2d: input has " + std::to_string(C) + " channels but weight expects " +
                          std::to_string(weight.dim(1)));
  }
  if (weight.dim(3) != k || k % 2 == 0) throw InvalidArgument("conv2d: kernel must be square and odd");
  if (stride != 1 && stride != 2) throw InvalidArgument("conv2d: stride must be 1 or 2");
  if (bias.numel() != Co) throw InvalidArgument("conv2d: bias length must equal output channels");
  if (H + 2 * pad < k || W + 2 * pad < k) throw InvalidArgument("conv2d: kernel larger than padded input");

  const std::size_t Ho = (H + 2 * pad - k) / stride + 1;
  const std::size_t Wo = (W + 2 * pad - k) / stride + 1;
  const std::size_t K = C * k * k, P = Ho * Wo;

  auto cols = std::make_shared<std::vector<double>>(K * P);
  im2col(input.values().data(), C, H, W, k, stride, pad, Ho, Wo, cols->data());

  std::vector<double> out(Co * P);
  MatMap out_m(out.data(), Co, P);
  ConstMatMap w_m(weight.values().data(), Co, K);
  ConstMatMap cols_m(cols->data(), K, P);
  out_m.noalias() = w_m * cols_m;
  auto b = bias.values();
  for (std::size_t o = 0; o < Co; ++o) out_m.row(o).array() += b[o];

  const bool keep_cols = grad_enabled() && weight.requires_grad();
  if (!keep_cols) cols.reset();

  return make_result({Co, Ho, Wo}, std::move(out), {input, weight, bias},
                     [=](Node& n) {
                       ConstMatMap g(n.grad.data(), Co, P);
                       if (wants(n, 1)) {
                         auto& gw = gbuf(n, 1);
                         MatMap gw_m(gw.data(), Co, K);
                         gw_m.noalias() += g * ConstMatMap(cols->data(), K, P).transpose();
                       }
                       if (wants(n, 2)) {
                         auto& gb = gbuf(n, 2);
                         for (std::size_t o = 0; o < Co; ++o) gb[o] += g.row(o).sum();
                       }
                       if (wants(n, 0)) {
                         ConstMatMap w(n.inputs[1]->value.data(), Co, K);
                         RowMatrix dcols = w.transpose() * g;
                         col2im_add(dcols.data(), C, H, W, k, stride, pad, Ho, Wo,
                                    gbuf(n, 0).data());
                       }
                     });
}

Tensor instance_norm(const Tensor& x, double eps) {
  require_rank(x, 3, "instance_norm");
  if (!(eps > 0)) throw InvalidArgument("instance_norm: eps must be positive");
  const std::size_t C = x.dim(0), HW = x.dim(1) * x.dim(2);
  auto in = x.values();
  std::vector<double> out(in.size());
  auto inv_std = std::make_shared<std::vector<double>>(C);
  for (std::size_t c = 0; c < C; ++c) {
    const double* src = in.data() + c * HW;
    double mean = 0.0;
    for (std::size_t i = 0; i < HW; ++i) mean += src[i];
    mean /= static_cast<double>(HW);
    double var = 0.0;
    for (std::size_t i = 0; i < HW; ++i) var += (src[i] - mean) * (src[i] - mean);
    var /= static_cast<double>(HW);
    const double r = 1.0 / std::sqrt(var + eps);
    (*inv_std)[c] = r;
    for (std::size_t i = 0; i < HW; ++i) out[c * HW + i] = (src[i] - mean) * r;
  }
  return make_result(x.shape(), std::move(out), {x}, [C, HW, inv_std](Node& n) {
    if (!wants(n, 0)) return;
    auto& g = gbuf(n, 0);
    const double inv_n = 1.0 / static_cast<double>(HW);
    for (std::size_t c = 0; c < C; ++c) {
      const double* dy = n.grad.data() + c * HW;
      const double* y = n.value.data() + c * HW;
      double mean_dy = 0.0, mean_dyy = 0.0;
      for (std::size_t i = 0; i < HW; ++i) {
        mean_dy += dy[i];
        mean_dyy += dy[i] * y[i];
      }
      mean_dy *= inv_n;
      mean_dyy *= inv_n;
      const double r = (*inv_std)[c];
      for (std::size_t i = 0; i < HW; ++i) g[c * HW + i] += r * (dy[i] - mean_dy - y[i] * mean_dyy);
    }
  });
}

Tensor relu(const Tensor& x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x,
      [](double v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  auto av = a.values(), bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& n) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (!wants(n, k)) continue;
      auto& g = gbuf(n, k);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  auto av = a.values(), bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& n) {
    if (wants(n, 0)) {
      auto& g = gbuf(n, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
    if (wants(n, 1)) {
      auto& g = gbuf(n, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= n.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  auto av = a.values(), bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& n) {
    const auto& x = n.inputs[0]->value;
    const auto& y = n.inputs[1]->value;
    if (wants(n, 0)) {
      auto& g = gbuf(n, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * y[i];
    }
    if (wants(n, 1)) {
      auto& g = gbuf(n, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * x[i];
    }
  });
}

Tensor scale(const Tensor& x, double alpha) {
  auto in = x.values();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = alpha * in[i];
  return make_result(x.shape(), std::move(out), {x}, [alpha](Node& n) {
    if (!wants(n, 0)) return;
    auto& g = gbuf(n, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += alpha * n.grad[i];
  });
}

Tensor mul_channels(const Tensor& x, const Tensor& mask) {
  require_rank(x, 3, "mul_channels");
  const std::size_t C = x.dim(0), HW = x.dim(1) * x.dim(2);
  if (mask.numel() != HW) {
    throw InvalidArgument("mul_channels: mask " + shape_str(mask.shape()) +
                          " does not match spatial extent of " + shape_str(x.shape()));
  }
  auto xv = x.values(), mv = mask.values();
  std::vector<double> out(xv.size());
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t i = 0; i < HW; ++i) out[c * HW + i] = xv[c * HW + i] * mv[i];
  return make_result(x.shape(), std::move(out), {x, mask}, [C, HW](Node& n) {
    const auto& xin = n.inputs[0]->value;
    const auto& m = n.inputs[1]->value;
    if (wants(n, 0)) {
      auto& g = gbuf(n, 0);
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < HW; ++i) g[c * HW + i] += n.grad[c * HW + i] * m[i];
    }
    if (wants(n, 1)) {
      auto& g = gbuf(n, 1);
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < HW; ++i) g[i] += n.grad[c * HW + i] * xin[c * HW + i];
    }
  });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank(a, 3, "concat_channels");
  require_rank(b, 3, "concat_channels");
  if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2)) {
    throw InvalidArgument("concat_channels: spatial mismatch " + shape_str(a.shape()) + " vs " +
                          shape_str(b.shape()));
  }
  const std::size_t na = a.numel();
  std::vector<double> out;
  out.reserve(na + b.numel());
  out.insert(out.end(), a.values().begin(), a.values().end());
  out.insert(out.end(), b.values().begin(), b.values().end());
  return make_result({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)}, std::move(out), {a, b},
                     [na](Node& n) {
                       if (wants(n, 0)) {
                         auto& g = gbuf(n, 0);
                         for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
                       }
                       if (wants(n, 1)) {
                         auto& g = gbuf(n, 1);
                         for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[na + i];
                       }
                     });
}

Tensor upsample_nearest2x(const Tensor& x) {
  require_rank(x, 3, "upsample_nearest2x");
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const std::size_t Ho = 2 * H, Wo = 2 * W;
  auto in = x.values();
  std::vector<double> out(C * Ho * Wo);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < Ho; ++y)
      for (std::size_t xo = 0; xo < Wo; ++xo)
        out[(c * Ho + y) * Wo + xo] = in[(c * H + y / 2) * W + xo / 2];
  return make_result({C, Ho, Wo}, std::move(out), {x}, [C, H, W](Node& n) {
    if (!wants(n, 0)) return;
    auto& g = gbuf(n, 0);
    const std::size_t Ho = 2 * H, Wo = 2 * W;
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < Ho; ++y)
        for (std::size_t xo = 0; xo < Wo; ++xo)
          g[(c * H + y / 2) * W + xo / 2] += n.grad[(c * Ho + y) * Wo + xo];
  });
}

Tensor avg_pool2x2(const Tensor& x) {
  require_rank(x, 3, "avg_pool2x2");
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  if (H < 2 || W < 2) throw InvalidArgument("avg_pool2x2: input smaller than window");
  const std::size_t Ho = H / 2, Wo = W / 2;
  auto in = x.values();
  std::vector<double> out(C * Ho * Wo);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < Ho; ++y)
      for (std::size_t xo = 0; xo < Wo; ++xo) {
        const double* p = in.data() + (c * H + 2 * y) * W + 2 * xo;
        out[(c * Ho + y) * Wo + xo] = 0.25 * (p[0] + p[1] + p[W] + p[W + 1]);
      }
  return make_result({C, Ho, Wo}, std::move(out), {x}, [C, H, W, Ho, Wo](Node& n) {
    if (!wants(n, 0)) return;
    auto& g = gbuf(n, 0);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < Ho; ++y)
        for (std::size_t xo = 0; xo < Wo; ++xo) {
          const double d = 0.25 * n.grad[(c * Ho + y) * Wo + xo];
          double* p = g.data() + (c * H + 2 * y) * W + 2 * xo;
          p[0] += d;
          p[1] += d;
          p[W] += d;
          p[W + 1] += d;
        }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw InvalidArgument("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  return make_result(std::move(shape), std::move(out), {x}, [](Node& n) {
    if (!wants(n, 0)) return;
    auto& g = gbuf(n, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t M = a.dim(0), K = a.dim(1), N = b.dim(1);
  if (b.dim(0) != K) {
    throw InvalidArgument("matmul: inner dimensions differ " + shape_str(a.shape()) + " x " +
                          shape_str(b.shape()));
  }
  std::vector<double> out(M * N);
  MatMap(out.data(), M, N).noalias() =
      ConstMatMap(a.values().data(), M, K) * ConstMatMap(b.values().data(), K, N);
  return make_result({M, N}, std::move(out), {a, b}, [M, K, N](Node& n) {
    ConstMatMap g(n.grad.data(), M, N);
    if (wants(n, 0)) {
      MatMap(gbuf(n, 0).data(), M, K).noalias() +=
          g * ConstMatMap(n.inputs[1]->value.data(), K, N).transpose();
    }
    if (wants(n, 1)) {
      MatMap(gbuf(n, 1).data(), K, N).noalias() +=
          ConstMatMap(n.inputs[0]->value.data(), M, K).transpose() * g;
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const std::size_t M = a.dim(0), N = a.dim(1);
  std::vector<double> out(M * N);
  MatMap(out.data(), N, M) = ConstMatMap(a.values().data(), M, N).transpose();
  return make_result({N, M}, std::move(out), {a}, [M, N](Node& n) {
    if (!wants(n, 0)) return;
    MatMap(gbuf(n, 0).data(), M, N) += ConstMatMap(n.grad.data(), N, M).transpose();
  });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  return make_result({1}, {s}, {x}, [](Node& n) {
    if (!wants(n, 0)) return;
    auto& g = gbuf(n, 0);
    for (auto& v : g) v += n.grad[0];
  });
}

Tensor sum_squares(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v * v;
  return make_result({1}, {s}, {x}, [](Node& n) {
    if (!wants(n, 0)) return;
    const auto& xin = n.inputs[0]->value;
    auto& g = gbuf(n, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * n.grad[0] * xin[i];
  });
}

Tensor squared_distance(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "squared_distance");
  auto av = a.values(), bv = b.values();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += (av[i] - bv[i]) * (av[i] - bv[i]);
  return make_result({1}, {s}, {a, b}, [](Node& n) {
    const auto& x = n.inputs[0]->value;
    const auto& y = n.inputs[1]->value;
    const double g0 = 2.0 * n.grad[0];
    if (wants(n, 0)) {
      auto& g = gbuf(n, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += g0 * (x[i] - y[i]);
    }
    if (wants(n, 1)) {
      auto& g = gbuf(n, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= g0 * (x[i] - y[i]);
    }
  });
}

Tensor residual_block(const Tensor& x, const ResidualWeights& w, double eps) {
  const std::size_t pad1 = (w.conv1_weight.dim(2) - 1) / 2;
  const std::size_t pad2 = (w.conv2_weight.dim(2) - 1) / 2;
  Tensor h = relu(instance_norm(conv2d(x, w.conv1_weight, w.conv1_bias, 1, pad1), eps));
  h = instance_norm(conv2d(h, w.conv2_weight, w.conv2_bias, 1, pad2), eps);
  if (h.shape() != x.shape()) throw InvalidArgument("residual_block: block must preserve shape");
  return add(x, h);
}

}  // namespace sst::ops
