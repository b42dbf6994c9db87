#include "stablestyle/io/weights.hpp"

#include <cmath>
#include <set>

#include "stablestyle/errors.hpp"
#include "stablestyle/io/binary.hpp"

namespace sst {

std::vector<std::uint8_t> encode_weights(const NamedTensors& tensors) {
  std::set<std::string> names;
  std::vector<std::uint8_t> out(kWeightsMagic, kWeightsMagic + 4);
  io::put_u32(out, kWeightsVersion);
  io::put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, tensor] : tensors) {
    if (!names.insert(name).second) throw InvalidArgument("duplicate tensor name '" + name + "'");
    io::put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    io::put_u32(out, static_cast<std::uint32_t>(tensor.rank()));
    for (auto d : tensor.shape()) io::put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : tensor.values()) io::put_f32(out, static_cast<float>(v));
  }
  return out;
}

NamedTensors decode_weights(std::span<const std::uint8_t> bytes) {
  io::ByteReader in(bytes, "weights file");
  auto magic = in.take(4);
  if (!std::equal(magic.begin(), magic.end(), kWeightsMagic)) {
    throw FormatError("weights file: bad magic (expected GSLW)");
  }
  const auto version = in.u32();
  if (version != kWeightsVersion) {
    throw FormatError("weights file: unsupported version " + std::to_string(version));
  }
  const auto count = in.u32();
  NamedTensors tensors;
  std::set<std::string> names;
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto len = in.u32();
    auto raw = in.take(len);
    std::string name(raw.begin(), raw.end());
    if (!names.insert(name).second) throw FormatError("weights file: duplicate tensor '" + name + "'");
    const auto rank = in.u32();
    if (rank == 0 || rank > 8) throw FormatError("weights file: bad rank for '" + name + "'");
    Shape shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = in.u32();
      if (d == 0) throw FormatError("weights file: zero extent in '" + name + "'");
      n *= d;
    }
    in.need(n * 4);
    std::vector<double> values(n);
    for (auto& v : values) {
      v = in.f32();
      if (!std::isfinite(v)) throw FormatError("weights file: non-finite value in '" + name + "'");
    }
    tensors.push_back({std::move(name), Tensor(std::move(shape), std::move(values))});
  }
  if (in.remaining() != 0) throw FormatError("weights file: trailing bytes after last tensor");
  return tensors;
}

void write_weights(const std::filesystem::path& path, const NamedTensors& tensors) {
  io::write_file(path, encode_weights(tensors));
}

NamedTensors read_weights(const std::filesystem::path& path) {
  return decode_weights(io::read_file(path));
}

const Tensor& find_tensor(const NamedTensors& tensors, const std::string& name) {
  for (const auto& t : tensors)
    if (t.name == name) return t.tensor;
  throw FormatError("weights file: missing tensor '" + name + "'");
}

bool has_tensor(const NamedTensors& tensors, const std::string& name) {
  for (const auto& t : tensors)
    if (t.name == name) return true;
  return false;
}

}  // namespace sst
