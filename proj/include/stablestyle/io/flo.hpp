#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "stablestyle/flow/flow.hpp"

namespace sst::io {

// Middlebury .flo: float32 202021.25, int32 width, int32 height, then
// interleaved (u, v) float32 in row-major order, all little-endian.
inline constexpr float kFloMagic = 202021.25f;

std::vector<std::uint8_t> encode_flo(const FlowField& flow);
FlowField decode_flo(std::span<const std::uint8_t> bytes);

FlowField read_flo(const std::filesystem::path& path);
void write_flo(const std::filesystem::path& path, const FlowField& flow);

}  // namespace sst::io
