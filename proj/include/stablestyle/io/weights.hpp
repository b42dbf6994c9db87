#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "stablestyle/autodiff/tensor.hpp"

namespace sst {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};
using NamedTensors = std::vector<NamedTensor>;

inline constexpr char kWeightsMagic[4] = {'G', 'S', 'L', 'W'};
inline constexpr std::uint32_t kWeightsVersion = 1;

// GSLW container: magic, u32 version, u32 count, then per tensor a u32-length
// UTF-8 name, u32 rank, u32 dims, and a float32 little-endian payload.
std::vector<std::uint8_t> encode_weights(const NamedTensors& tensors);
NamedTensors decode_weights(std::span<const std::uint8_t> bytes);

void write_weights(const std::filesystem::path& path, const NamedTensors& tensors);
NamedTensors read_weights(const std::filesystem::path& path);

// Throws FormatError naming the missing tensor.
const Tensor& find_tensor(const NamedTensors& tensors, const std::string& name);
bool has_tensor(const NamedTensors& tensors, const std::string& name);

}  // namespace sst
