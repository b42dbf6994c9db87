#pragma once

#include <cstdint>
#include <string>

#include "stablestyle/autodiff/rng.hpp"
#include "stablestyle/flow/video.hpp"

namespace sst {

enum class SceneKind { StaticNoise, GlobalTranslate, MovingSquare };

SceneKind parse_scene_kind(const std::string& name);
std::string scene_kind_name(SceneKind kind);

struct SceneParams {
  double noise = 0.0;      // per-frame i.i.d. Gaussian noise sigma
  int dx = 1, dy = 0;      // integer motion per frame (translate, square)
  std::size_t square = 16; // moving-square side length
};

// Multi-octave value noise in [0,1], [channels, H, W].
Tensor procedural_texture(std::size_t channels, std::size_t height, std::size_t width, Rng& rng);

VideoSequence synthetic_scene(SceneKind kind, const SceneParams& params, std::size_t frames,
                              std::size_t height, std::size_t width, std::uint64_t seed);

}  // namespace sst
