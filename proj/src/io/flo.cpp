#include "stablestyle/io/flo.hpp"

#include <cmath>
#include <sstream>

#include "stablestyle/errors.hpp"
#include "stablestyle/io/binary.hpp"

namespace sst::io {

std::vector<std::uint8_t> encode_flo(const FlowField& flow) {
  if (flow.u.size() != flow.height * flow.width || flow.v.size() != flow.u.size()) {
    throw InvalidArgument("flo: flow components do not match extent");
  }
  std::vector<std::uint8_t> out;
  out.reserve(12 + 8 * flow.u.size());
  put_f32(out, kFloMagic);
  put_u32(out, static_cast<std::uint32_t>(flow.width));
  put_u32(out, static_cast<std::uint32_t>(flow.height));
  for (std::size_t i = 0; i < flow.u.size(); ++i) {
    put_f32(out, static_cast<float>(flow.u[i]));
    put_f32(out, static_cast<float>(flow.v[i]));
  }
  return out;
}

FlowField decode_flo(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes, "flo file");
  const float magic = in.f32();
  if (magic != kFloMagic) {
    std::ostringstream os;
    os.precision(9);
    os << "flo file: bad magic " << magic << " (expected 202021.25)";
    throw FormatError(os.str());
  }
  const std::int32_t w = in.i32(), h = in.i32();
  if (w <= 0 || h <= 0) throw FormatError("flo file: non-positive extent");
  const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (in.remaining() != 8 * n) {
    throw FormatError("flo file: size mismatch (" + std::to_string(in.remaining()) + " payload bytes for " +
                      std::to_string(w) + "x" + std::to_string(h) + ")");
  }
  FlowField f;
  f.width = static_cast<std::size_t>(w);
  f.height = static_cast<std::size_t>(h);
  f.u.resize(n);
  f.v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    f.u[i] = in.f32();
    f.v[i] = in.f32();
    if (!std::isfinite(f.u[i]) || !std::isfinite(f.v[i])) throw FormatError("flo file: non-finite flow");
  }
  return f;
}

FlowField read_flo(const std::filesystem::path& path) { return decode_flo(read_file(path)); }

void write_flo(const std::filesystem::path& path, const FlowField& flow) { write_file(path, encode_flo(flow)); }

}  // namespace sst::io
