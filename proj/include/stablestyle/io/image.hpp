#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "stablestyle/autodiff/tensor.hpp"
#include "stablestyle/flow/flow.hpp"

namespace sst::io {

// Binary PPM (P6) <-> [3,H,W], binary PGM (P5) <-> [1,H,W]; maxval must be 255.
// Reading maps v -> v/255; writing maps x -> round(255 x) clamped to [0,255].
std::vector<std::uint8_t> encode_pnm(const Tensor& image);
Tensor decode_pnm(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_png(const Tensor& image);
Tensor decode_png(std::span<const std::uint8_t> bytes);

// Dispatches on extension: .ppm / .pgm / .png.
Tensor read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Tensor& image);

OcclusionMask read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const OcclusionMask& mask);

}  // namespace sst::io
