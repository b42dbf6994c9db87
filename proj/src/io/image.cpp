#include "stablestyle/io/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "stablestyle/errors.hpp"
#include "stablestyle/io/binary.hpp"

namespace sst::io {

namespace {

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L));
}

void check_image(const Tensor& image) {
  if (image.rank() != 3 || (image.dim(0) != 1 && image.dim(0) != 3)) {
    throw InvalidArgument("image must be [1,H,W] or [3,H,W], got " + shape_str(image.shape()));
  }
}

// Interleaves planar [C,H,W] into 8-bit samples.
std::vector<std::uint8_t> to_bytes(const Tensor& image) {
  const std::size_t C = image.dim(0), HW = image.dim(1) * image.dim(2);
  auto v = image.values();
  std::vector<std::uint8_t> out(C * HW);
  for (std::size_t i = 0; i < HW; ++i)
    for (std::size_t c = 0; c < C; ++c) out[i * C + c] = quantize(v[c * HW + i]);
  return out;
}

Tensor from_bytes(std::span<const std::uint8_t> px, std::size_t C, std::size_t H, std::size_t W) {
  std::vector<double> v(C * H * W);
  for (std::size_t i = 0; i < H * W; ++i)
    for (std::size_t c = 0; c < C; ++c) v[c * H * W + i] = px[i * C + c] / 255.0;
  return Tensor({C, H, W}, std::move(v));
}

class PnmHeader {
 public:
  explicit PnmHeader(std::span<const std::uint8_t> b) : b_(b) {}

  std::string token() {
    skip_space();
    std::string t;
    while (pos_ < b_.size() && !std::isspace(b_[pos_])) t.push_back(static_cast<char>(b_[pos_++]));
    if (t.empty()) throw FormatError("pnm: truncated header");
    return t;
  }
  long number() {
    const std::string t = token();
    if (!std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      throw FormatError("pnm: malformed header field '" + t + "'");
    }
    if (t.size() > 9) throw FormatError("pnm: header value too large");
    return std::stol(t);
  }
  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= b_.size() || !std::isspace(b_[pos_])) throw FormatError("pnm: malformed header");
    return pos_ + 1;
  }

 private:
  void skip_space() {
    while (pos_ < b_.size()) {
      if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else if (std::isspace(b_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

std::string lower_ext(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

}  // namespace

std::vector<std::uint8_t> encode_pnm(const Tensor& image) {
  check_image(image);
  const std::string header = std::string(image.dim(0) == 3 ? "P6" : "P5") + "\n" +
                             std::to_string(image.dim(2)) + " " + std::to_string(image.dim(1)) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const auto px = to_bytes(image);
  out.insert(out.end(), px.begin(), px.end());
  return out;
}

Tensor decode_pnm(std::span<const std::uint8_t> bytes) {
  PnmHeader h(bytes);
  const std::string magic = h.token();
  std::size_t C;
  if (magic == "P6") {
    C = 3;
  } else if (magic == "P5") {
    C = 1;
  } else {
    throw FormatError("pnm: unsupported magic '" + magic + "' (expected P6 or P5)");
  }
  const long w = h.number(), hh = h.number(), maxval = h.number();
  if (w <= 0 || hh <= 0) throw FormatError("pnm: non-positive extent");
  if (maxval != 255) throw FormatError("pnm: unsupported maxval " + std::to_string(maxval) + " (expected 255)");
  const std::size_t off = h.raster_offset();
  const std::size_t need = C * static_cast<std::size_t>(w) * static_cast<std::size_t>(hh);
  if (bytes.size() < off + need) throw FormatError("pnm: truncated payload");
  return from_bytes(bytes.subspan(off, need), C, static_cast<std::size_t>(hh), static_cast<std::size_t>(w));
}

namespace {
struct PngBuffer {
  std::vector<std::uint8_t>* out;
};
void png_write_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* buf = static_cast<PngBuffer*>(png_get_io_ptr(png));
  buf->out->insert(buf->out->end(), data, data + len);
}
struct PngReader {
  std::span<const std::uint8_t> in;
  std::size_t pos = 0;
};
void png_read_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* r = static_cast<PngReader*>(png_get_io_ptr(png));
  if (r->pos + len > r->in.size()) png_error(png, "truncated");
  std::copy_n(r->in.begin() + r->pos, len, data);
  r->pos += len;
}
void png_error_cb(png_structp, png_const_charp msg) { throw FormatError(std::string("png: ") + msg); }
void png_warn_cb(png_structp, png_const_charp) {}
}  // namespace

std::vector<std::uint8_t> encode_png(const Tensor& image) {
  check_image(image);
  const std::size_t C = image.dim(0), H = image.dim(1), W = image.dim(2);
  auto px = to_bytes(image);
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_cb, png_warn_cb);
  png_infop info = png_create_info_struct(png);
  try {
    PngBuffer buf{&out};
    png_set_write_fn(png, &buf, png_write_cb, nullptr);
    png_set_IHDR(png, info, static_cast<png_uint_32>(W), static_cast<png_uint_32>(H), 8,
                 C == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t y = 0; y < H; ++y) png_write_row(png, px.data() + y * W * C);
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

Tensor decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8)) throw FormatError("png: bad signature");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_cb, png_warn_cb);
  png_infop info = png_create_info_struct(png);
  try {
    PngReader reader{bytes};
    png_set_read_fn(png, &reader, png_read_cb);
    png_read_info(png, info);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);
    const std::size_t W = png_get_image_width(png, info), H = png_get_image_height(png, info);
    const std::size_t C = png_get_channels(png, info);
    if (C != 1 && C != 3) throw FormatError("png: unsupported channel count");
    std::vector<std::uint8_t> px(W * H * C);
    for (std::size_t y = 0; y < H; ++y) png_read_row(png, px.data() + y * W * C, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return from_bytes(px, C, H, W);
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
}

Tensor read_image(const std::filesystem::path& path) {
  const auto ext = lower_ext(path);
  const auto bytes = read_file(path);
  if (ext == ".png") return decode_png(bytes);
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return decode_pnm(bytes);
  throw FormatError("unsupported image extension '" + ext + "' for " + path.string());
}

void write_image(const std::filesystem::path& path, const Tensor& image) {
  const auto ext = lower_ext(path);
  if (ext == ".png") {
    write_file(path, encode_png(image));
  } else if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") {
    write_file(path, encode_pnm(image));
  } else {
    throw FormatError("unsupported image extension '" + ext + "' for " + path.string());
  }
}

OcclusionMask read_mask(const std::filesystem::path& path) {
  const Tensor t = read_image(path);
  if (t.dim(0) != 1) throw FormatError("mask " + path.string() + " must be single-channel");
  return {t.dim(1), t.dim(2), std::vector<double>(t.values().begin(), t.values().end())};
}

void write_mask(const std::filesystem::path& path, const OcclusionMask& mask) {
  write_image(path, mask.as_tensor());
}

}  // namespace sst::io
