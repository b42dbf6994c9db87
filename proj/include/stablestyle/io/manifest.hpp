#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace sst::io {

// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> bytes);

struct Artifact {
  std::string path;  // relative to the output directory, '/' separated
  std::string sha256;
  std::uint64_t bytes = 0;
};

// Record of one run: the resolved settings and a hash of every output file.
// Contains no timestamps, so identical runs produce identical manifests.
struct Manifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
  std::vector<Artifact> artifacts;

  // Hashes out_dir / relative as it is on disk now.
  void add_artifact(const std::filesystem::path& out_dir, const std::string& relative);
  std::string to_json() const;
  void write(const std::filesystem::path& out_dir) const;
};

}  // namespace sst::io
