#include "stablestyle/flow/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "stablestyle/errors.hpp"

namespace sst {

SceneKind parse_scene_kind(const std::string& name) {
  if (name == "static-noise") return SceneKind::StaticNoise;
  if (name == "global-translate") return SceneKind::GlobalTranslate;
  if (name == "moving-square") return SceneKind::MovingSquare;
  throw InvalidArgument("unknown scene kind '" + name +
                        "' (expected static-noise, global-translate or moving-square)");
}

std::string scene_kind_name(SceneKind kind) {
  switch (kind) {
    case SceneKind::StaticNoise: return "static-noise";
    case SceneKind::GlobalTranslate: return "global-translate";
    case SceneKind::MovingSquare: return "moving-square";
  }
  return "?";
}

Tensor procedural_texture(std::size_t channels, std::size_t height, std::size_t width, Rng& rng) {
  static constexpr std::size_t kCells[] = {16, 8, 4};
  static constexpr double kAmps[] = {0.5, 0.3, 0.2};
  std::vector<double> out(channels * height * width, 0.0);
  auto smooth = [](double t) { return t * t * (3.0 - 2.0 * t); };
  for (std::size_t o = 0; o < 3; ++o) {
    const std::size_t cell = kCells[o];
    const std::size_t gh = height / cell + 2, gw = width / cell + 2;
    for (std::size_t c = 0; c < channels; ++c) {
      std::vector<double> lattice(gh * gw);
      for (auto& v : lattice) v = rng.uniform();
      for (std::size_t y = 0; y < height; ++y) {
        const std::size_t gy = y / cell;
        const double ty = smooth(static_cast<double>(y % cell) / static_cast<double>(cell));
        for (std::size_t x = 0; x < width; ++x) {
          const std::size_t gx = x / cell;
          const double tx = smooth(static_cast<double>(x % cell) / static_cast<double>(cell));
          const double a = lattice[gy * gw + gx], b = lattice[gy * gw + gx + 1];
          const double d = lattice[(gy + 1) * gw + gx], e = lattice[(gy + 1) * gw + gx + 1];
          const double top = a + (b - a) * tx, bot = d + (e - d) * tx;
          out[(c * height + y) * width + x] += kAmps[o] * (top + (bot - top) * ty);
        }
      }
    }
  }
  const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
  const double mn = *lo, range = std::max(*hi - *lo, 1e-12);
  for (auto& v : out) v = (v - mn) / range;
  return Tensor({channels, height, width}, std::move(out));
}

namespace {

Tensor crop(const Tensor& canvas, std::size_t oy, std::size_t ox, std::size_t H, std::size_t W) {
  const std::size_t C = canvas.dim(0), CH = canvas.dim(1), CW = canvas.dim(2);
  std::vector<double> out(C * H * W);
  auto src = canvas.values();
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x)
        out[(c * H + y) * W + x] = src[(c * CH + oy + y) * CW + ox + x];
  return Tensor({C, H, W}, std::move(out));
}

Tensor add_noise(const Tensor& frame, double sigma, Rng& rng) {
  if (sigma <= 0) return frame;
  std::vector<double> v(frame.values().begin(), frame.values().end());
  for (auto& x : v) x = std::clamp(x + rng.normal(0.0, sigma), 0.0, 1.0);
  return Tensor(frame.shape(), std::move(v));
}

struct Rect {
  long x0, y0, size;
  bool contains(long x, long y) const { return x >= x0 && x < x0 + size && y >= y0 && y < y0 + size; }
};

// True when the 3x3 neighborhood of (x, y) straddles the rectangle edge.
bool near_edge(const Rect& r, long x, long y) {
  const bool inside = r.contains(x, y);
  for (long oy = -1; oy <= 1; ++oy)
    for (long ox = -1; ox <= 1; ++ox)
      if (r.contains(x + ox, y + oy) != inside) return true;
  return false;
}

}  // namespace

VideoSequence synthetic_scene(SceneKind kind, const SceneParams& params, std::size_t frames,
                              std::size_t height, std::size_t width, std::uint64_t seed) {
  if (frames < 2) throw InvalidArgument("synthetic_scene: need at least 2 frames");
  if (height < 4 || width < 4) throw InvalidArgument("synthetic_scene: frame too small");
  if (params.noise < 0) throw InvalidArgument("synthetic_scene: noise must be non-negative");
  Rng rng(seed);
  Rng texture_rng = rng.fork(1);
  Rng noise_rng = rng.fork(2);
  const std::size_t H = height, W = width, T = frames;
  const long adx = std::labs(params.dx), ady = std::labs(params.dy);
  VideoSequence seq;

  switch (kind) {
    case SceneKind::StaticNoise: {
      const Tensor base = procedural_texture(3, H, W, texture_rng);
      for (std::size_t t = 0; t < T; ++t) seq.frames.push_back(add_noise(base, params.noise, noise_rng));
      for (std::size_t t = 1; t < T; ++t) {
        seq.flows.push_back(FlowField::zeros(H, W));
        seq.backward_flows.push_back(FlowField::zeros(H, W));
        seq.masks.push_back(OcclusionMask::ones(H, W));
      }
      break;
    }
    case SceneKind::GlobalTranslate: {
      if (adx >= static_cast<long>(W) || ady >= static_cast<long>(H)) {
        throw InvalidArgument("synthetic_scene: motion larger than frame");
      }
      const std::size_t span_x = (T - 1) * adx, span_y = (T - 1) * ady;
      const Tensor canvas = procedural_texture(3, H + span_y, W + span_x, texture_rng);
      for (std::size_t t = 0; t < T; ++t) {
        // frame_t(x) = canvas(x + o_t) with o_t - o_{t-1} = -d, so frame_t(x + d) = frame_{t-1}(x).
        const std::size_t ox = params.dx >= 0 ? (T - 1 - t) * adx : t * adx;
        const std::size_t oy = params.dy >= 0 ? (T - 1 - t) * ady : t * ady;
        seq.frames.push_back(add_noise(crop(canvas, oy, ox, H, W), params.noise, noise_rng));
      }
      OcclusionMask mask = OcclusionMask::ones(H, W);
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) {
          const long sx = static_cast<long>(x) + params.dx, sy = static_cast<long>(y) + params.dy;
          if (sx < 0 || sy < 0 || sx >= static_cast<long>(W) || sy >= static_cast<long>(H)) {
            mask.m[y * W + x] = 0.0;
          }
        }
      for (std::size_t t = 1; t < T; ++t) {
        seq.flows.push_back(FlowField::constant(H, W, params.dx, params.dy));
        seq.backward_flows.push_back(FlowField::constant(H, W, -params.dx, -params.dy));
        seq.masks.push_back(mask);
      }
      break;
    }
    case SceneKind::MovingSquare: {
      const long S = static_cast<long>(params.square);
      const long span_x = static_cast<long>(T - 1) * adx, span_y = static_cast<long>(T - 1) * ady;
      const long free_x = static_cast<long>(W) - S - span_x, free_y = static_cast<long>(H) - S - span_y;
      if (S < 1 || free_x < 0 || free_y < 0) {
        throw InvalidArgument("synthetic_scene: motion larger than frame");
      }
      const Tensor background = procedural_texture(3, H, W, texture_rng);
      const Tensor patch = procedural_texture(3, S, S, texture_rng);
      const long sx0 = free_x / 2 + (params.dx < 0 ? span_x : 0);
      const long sy0 = free_y / 2 + (params.dy < 0 ? span_y : 0);
      auto rect_at = [&](std::size_t t) {
        return Rect{sx0 + static_cast<long>(t) * params.dx, sy0 + static_cast<long>(t) * params.dy, S};
      };
      auto bg = background.values();
      auto sq = patch.values();
      for (std::size_t t = 0; t < T; ++t) {
        const Rect r = rect_at(t);
        std::vector<double> img(3 * H * W);
        OcclusionMask fg = OcclusionMask::zeros(H, W);
        for (std::size_t c = 0; c < 3; ++c)
          for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x) {
              const long lx = static_cast<long>(x), ly = static_cast<long>(y);
              const std::size_t i = (c * H + y) * W + x;
              if (r.contains(lx, ly)) {
                img[i] = sq[(c * S + (ly - r.y0)) * S + (lx - r.x0)];
                fg.m[y * W + x] = 1.0;
              } else {
                img[i] = bg[i];
              }
            }
        seq.frames.push_back(add_noise(Tensor({3, H, W}, std::move(img)), params.noise, noise_rng));
        seq.foreground.push_back(std::move(fg));
      }
      for (std::size_t t = 1; t < T; ++t) {
        const Rect prev = rect_at(t - 1), next = rect_at(t);
        FlowField fwd = FlowField::zeros(H, W), bwd = FlowField::zeros(H, W);
        OcclusionMask mask = OcclusionMask::ones(H, W);
        for (std::size_t y = 0; y < H; ++y)
          for (std::size_t x = 0; x < W; ++x) {
            const long lx = static_cast<long>(x), ly = static_cast<long>(y);
            const std::size_t i = y * W + x;
            const bool in_prev = prev.contains(lx, ly);
            if (in_prev) {
              fwd.u[i] = params.dx;
              fwd.v[i] = params.dy;
            }
            if (next.contains(lx, ly)) {
              bwd.u[i] = -params.dx;
              bwd.v[i] = -params.dy;
            }
            bool valid = true;
            // Background about to be covered by the square.
            if (!in_prev && next.contains(lx, ly)) valid = false;
            if (near_edge(prev, lx, ly) || near_edge(next, lx, ly)) valid = false;
            const long tx = lx + static_cast<long>(fwd.u[i]), ty = ly + static_cast<long>(fwd.v[i]);
            if (tx < 0 || ty < 0 || tx >= static_cast<long>(W) || ty >= static_cast<long>(H)) valid = false;
            if (!valid) mask.m[i] = 0.0;
          }
        seq.flows.push_back(std::move(fwd));
        seq.backward_flows.push_back(std::move(bwd));
        seq.masks.push_back(std::move(mask));
      }
      break;
    }
  }
  seq.validate();
  return seq;
}

}  // namespace sst
