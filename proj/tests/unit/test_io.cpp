#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <sstream>
#include <string>

#include "doctest.h"
#include "stablestyle/autodiff/rng.hpp"
#include "stablestyle/errors.hpp"
#include "stablestyle/flow/synthetic.hpp"
#include "stablestyle/io/binary.hpp"
#include "stablestyle/io/config.hpp"
#include "stablestyle/io/csv.hpp"
#include "stablestyle/io/flo.hpp"
#include "stablestyle/io/image.hpp"
#include "stablestyle/io/manifest.hpp"
#include "stablestyle/io/sequence.hpp"
#include "stablestyle/io/weights.hpp"
#include "support/temp_dir.hpp"

using namespace sst;
using namespace sst::io;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = SST_FIXTURES;

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

std::string hex(std::span<const std::uint8_t> b) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  for (auto c : b) {
    out += digits[c >> 4];
    out += digits[c & 15];
  }
  return out;
}

template <class F>
std::string error_text(F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("the 2x1 PPM fixture decodes to the expected tensor") {
  Tensor t = read_image(kFixtures / "red_black_2x1.ppm");
  CHECK(t.shape() == Shape{3, 1, 2});
  CHECK(std::vector<double>(t.values().begin(), t.values().end()) == std::vector<double>{1, 0, 0, 0, 0, 0});
}

TEST_CASE("every fixture round-trips byte for byte") {
  for (const char* name : {"red_black_2x1.ppm", "mask_3x2.pgm"}) {
    const auto raw = read_file(kFixtures / name);
    CHECK(encode_pnm(decode_pnm(raw)) == raw);
  }
  const auto flo = read_file(kFixtures / "flow_1x1.flo");
  CHECK(encode_flo(decode_flo(flo)) == flo);
  const auto gslw = read_file(kFixtures / "tiny.gslw");
  CHECK(encode_weights(decode_weights(gslw)) == gslw);
}

TEST_CASE("the mask fixture decodes to v/255") {
  OcclusionMask m = read_mask(kFixtures / "mask_3x2.pgm");
  CHECK(m.height == 2);
  CHECK(m.width == 3);
  CHECK(m.at(0, 1) == 1.0);
  CHECK(m.at(0, 2) == doctest::Approx(128.0 / 255.0));
  CHECK(m.at(1, 2) == doctest::Approx(64.0 / 255.0));
  CHECK_THROWS_AS(read_mask(kFixtures / "red_black_2x1.ppm"), FormatError);
}

TEST_CASE("image quantization error stays within half a step") {
  Rng rng(1);
  test::TempDir dir("img");
  for (const char* ext : {".ppm", ".png"}) {
    Tensor t = random_uniform({3, 7, 5}, rng);
    const auto path = dir / (std::string("x") + ext);
    write_image(path, t);
    Tensor back = read_image(path);
    REQUIRE(back.shape() == t.shape());
    for (std::size_t i = 0; i < t.numel(); ++i) CHECK(std::abs(back.values()[i] - t.values()[i]) <= 1.0 / 510.0 + 1e-15);
  }
  Tensor gray = random_uniform({1, 4, 4}, rng);
  write_image(dir / "g.pgm", gray);
  CHECK(read_image(dir / "g.pgm").shape() == Shape{1, 4, 4});
}

TEST_CASE("out-of-range values are clamped on write") {
  const auto bytes = encode_pnm(Tensor({1, 1, 2}, {-0.5, 1.7}));
  CHECK(bytes[bytes.size() - 2] == 0);
  CHECK(bytes[bytes.size() - 1] == 255);
}

TEST_CASE("malformed PNM files are rejected") {
  CHECK_THROWS_AS(decode_pnm(bytes_of("P6\n2 1\n65535\n")), FormatError);
  CHECK(error_text([] { decode_pnm(bytes_of("P6\n1 1\n127\nabc")); }).find("maxval 127") != std::string::npos);
  CHECK_THROWS_AS(decode_pnm(bytes_of("P6\n2 1\n255\n\xff\x00")), FormatError);
  CHECK_THROWS_AS(decode_pnm(bytes_of("P3\n1 1\n255\n1 2 3")), FormatError);
  CHECK_THROWS_AS(decode_pnm(bytes_of("P6\n2")), FormatError);
  // Comments are allowed in the header.
  CHECK(decode_pnm(bytes_of("P5\n# note\n1 1\n255\n\x80")).values()[0] == doctest::Approx(128.0 / 255.0));
  CHECK_THROWS_AS(decode_png(bytes_of("not a png")), FormatError);
  CHECK_THROWS_AS(read_image(kFixtures / "missing.ppm"), IoError);
  CHECK_THROWS_AS(write_image("x.bmp", Tensor::zeros({3, 1, 1})), FormatError);
}

TEST_CASE("1x1 flow encodes to the known 20 bytes") {
  const auto bytes = encode_flo(FlowField::constant(1, 1, 1.5, -2.0));
  CHECK(bytes.size() == 20);
  CHECK(hex(bytes) == "5049454801000000010000000000c03f000000c0");
  CHECK(read_file(kFixtures / "flow_1x1.flo") == bytes);
  const FlowField f = read_flo(kFixtures / "flow_1x1.flo");
  CHECK(f.u[0] == 1.5);
  CHECK(f.v[0] == -2.0);
}

TEST_CASE("flo round trip is bit exact for float32 values") {
  Rng rng(2);
  FlowField f = FlowField::zeros(5, 6);
  for (auto& u : f.u) u = static_cast<float>(rng.uniform(-4, 4));
  for (auto& v : f.v) v = static_cast<float>(rng.uniform(-4, 4));
  test::TempDir dir("flo");
  write_flo(dir / "f.flo", f);
  const FlowField g = read_flo(dir / "f.flo");
  CHECK(g.u == f.u);
  CHECK(g.v == f.v);
  CHECK(fs::file_size(dir / "f.flo") == 12 + 8 * 30);
}

TEST_CASE("flo errors name what went wrong") {
  auto bytes = encode_flo(FlowField::zeros(2, 2));
  auto bad = bytes;
  bad[0] = 0;
  const std::string msg = error_text([&] { decode_flo(bad); });
  CHECK(msg.find("bad magic") != std::string::npos);
  float found;
  std::memcpy(&found, bad.data(), 4);
  std::ostringstream os;
  os.precision(9);
  os << found;
  CHECK(msg.find(os.str()) != std::string::npos);
  bytes.pop_back();
  CHECK_THROWS_AS(decode_flo(bytes), FormatError);
}

TEST_CASE("weights container round-trips and rejects corruption") {
  const auto raw = read_file(kFixtures / "tiny.gslw");
  const auto tensors = decode_weights(raw);
  REQUIRE(tensors.size() == 2);
  CHECK(tensors[0].name == "a.weight");
  CHECK(tensors[0].tensor.shape() == Shape{2, 1});
  CHECK(tensors[0].tensor.values()[1] == -1.25);
  CHECK(find_tensor(tensors, "b").item() == 3.0);
  CHECK_THROWS_AS(find_tensor(tensors, "c"), FormatError);

  auto bad_magic = raw;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_weights(bad_magic), FormatError);
  auto bad_version = raw;
  bad_version[4] = 9;
  CHECK_THROWS_AS(decode_weights(bad_version), FormatError);
  auto truncated = raw;
  truncated.pop_back();
  CHECK_THROWS_AS(decode_weights(truncated), FormatError);
  auto trailing = raw;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode_weights(trailing), FormatError);
  CHECK_THROWS_AS(encode_weights({{"x", Tensor::zeros({1})}, {"x", Tensor::zeros({1})}}), InvalidArgument);
  auto dup = encode_weights({{"x", Tensor::zeros({1})}, {"y", Tensor::zeros({1})}});
  std::replace(dup.begin(), dup.end(), static_cast<std::uint8_t>('y'), static_cast<std::uint8_t>('x'));
  CHECK_THROWS_AS(decode_weights(dup), FormatError);
}

TEST_CASE("config parsing") {
  const Config c = Config::parse("# comment\n  a = 1 \n\nb=x,y\n", "t.cfg");
  CHECK(c.get("a") == "1");
  CHECK(c.get("b") == "x,y");
  CHECK_THROWS_AS(Config::parse("a=1\na=2\n", "t.cfg"), InvalidArgument);
  CHECK(error_text([] { Config::parse("a=1\na=2\n", "t.cfg"); }).find("t.cfg:2") != std::string::npos);
  CHECK_THROWS_AS(Config::parse("novalue\n"), InvalidArgument);
  CHECK_THROWS_AS(c.get("zzz"), InvalidArgument);
  Config d = Config::parse("a=5");
  Config e = c;
  e.merge(d);
  CHECK(e.get("a") == "5");
  CHECK(parse_int("k", "-12") == -12);
  CHECK_THROWS_AS(parse_int("k", "12x"), InvalidArgument);
  CHECK(parse_double("k", "1e-3") == 1e-3);
  CHECK_THROWS_AS(parse_double("k", "nan"), InvalidArgument);
  CHECK(parse_bool("k", "yes"));
  CHECK_FALSE(parse_bool("k", "off"));
  CHECK_THROWS_AS(parse_bool("k", "maybe"), InvalidArgument);
  CHECK(parse_list(" a, b ,c") == std::vector<std::string>{"a", "b", "c"});
  CHECK(parse_list("").empty());
}

TEST_CASE("csv formatting") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(3.0) == "3");
  CHECK(format_number(1e-20) == "1e-20");
  CHECK(format_number(INFINITY) == "inf");
  CHECK(format_number(-INFINITY) == "-inf");
  CsvTable t({"name", "value"});
  t.add_row({"a,b", "1"});
  t.add_row({"say \"hi\"", "2"});
  CHECK(t.str() == "name,value\n\"a,b\",1\n\"say \"\"hi\"\"\",2\n");
  CHECK_THROWS_AS(t.add_row({"only one"}), InvalidArgument);
}

TEST_CASE("manifest hashes match the files and the json is stable") {
  CHECK(sha256_hex(bytes_of("abc")) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  test::TempDir dir("manifest");
  write_file(dir / "b.txt", bytes_of("abc"));
  fs::create_directories(dir / "sub");
  write_file(dir / "sub/a.txt", bytes_of(""));
  Manifest m{"demo", {{"k", "v"}}, 7, {}};
  m.add_artifact(dir.path(), "b.txt");
  m.add_artifact(dir.path(), "sub/a.txt");
  const std::string j = m.to_json();
  CHECK(j.find("ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad") != std::string::npos);
  CHECK(j.find("e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855") != std::string::npos);
  CHECK(j.find("\"b.txt\"") < j.find("\"sub/a.txt\""));
  CHECK(m.to_json() == j);
  m.write(dir.path());
  CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("sequences round-trip through the directory layout") {
  auto seq = synthetic_scene(SceneKind::MovingSquare, {0.0, 1, 1, 6}, 3, 16, 20, 1);
  test::TempDir dir("seq");
  const auto files = write_sequence(dir.path(), seq, {true, true});
  CHECK(files.size() == 3 + 2 + 2 + 2 + 3);
  CHECK(numbered("frame_", 7, ".ppm") == "frame_0007.ppm");
  const auto back = read_sequence(dir.path());
  CHECK(back.length() == 3);
  CHECK(back.flows.size() == 2);
  CHECK(back.backward_flows.size() == 2);
  CHECK(back.foreground.size() == 3);
  CHECK(back.flows[0].u == seq.flows[0].u);
  CHECK(back.masks[1].m == seq.masks[1].m);
  for (std::size_t i = 0; i < seq.frames[2].numel(); ++i)
    CHECK(std::abs(back.frames[2].values()[i] - seq.frames[2].values()[i]) <= 1.0 / 510.0 + 1e-15);

  fs::remove(dir / "mask_0001.pgm");
  CHECK_THROWS_AS(read_sequence(dir.path()), FormatError);
  CHECK_THROWS_AS(read_sequence(dir / "nope"), IoError);
}
