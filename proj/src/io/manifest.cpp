#include "stablestyle/io/manifest.hpp"

#include <openssl/sha.h>

#include <algorithm>

#include "json.hpp"

#include "stablestyle/io/binary.hpp"

namespace sst::io {

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(bytes.data(), bytes.size(), digest);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned char b : digest) {
    out += kHex[b >> 4];
    out += kHex[b & 15];
  }
  return out;
}

void Manifest::add_artifact(const std::filesystem::path& out_dir, const std::string& relative) {
  const auto bytes = read_file(out_dir / relative);
  artifacts.push_back({relative, sha256_hex(bytes), bytes.size()});
}

std::string Manifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["seed"] = seed;
  auto& cfg = j["config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config) cfg[k] = v;
  auto sorted = artifacts;
  std::sort(sorted.begin(), sorted.end(), [](const Artifact& a, const Artifact& b) { return a.path < b.path; });
  j["artifacts"] = nlohmann::ordered_json::array();
  for (const auto& a : sorted) {
    j["artifacts"].push_back(nlohmann::ordered_json{{"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
  }
  return j.dump(2) + "\n";
}

void Manifest::write(const std::filesystem::path& out_dir) const {
  const std::string text = to_json();
  write_file(out_dir / "manifest.json",
             std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace sst::io
