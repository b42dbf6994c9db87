#include "stablestyle/io/sequence.hpp"

#include <cstdio>

#include "stablestyle/errors.hpp"
#include "stablestyle/io/flo.hpp"
#include "stablestyle/io/image.hpp"

namespace sst::io {

namespace fs = std::filesystem;

std::string numbered(const std::string& prefix, std::size_t index, const std::string& ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu", index);
  return prefix + buf + ext;
}

std::vector<std::string> write_frames(const fs::path& dir, const std::vector<Tensor>& frames) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    names.push_back(numbered("frame_", i, ".ppm"));
    write_image(dir / names.back(), frames[i]);
  }
  return names;
}

std::vector<std::string> write_sequence(const fs::path& dir, const VideoSequence& seq, const SequenceExtras& extras) {
  seq.validate();
  auto names = write_frames(dir, seq.frames);
  for (std::size_t i = 0; i < seq.flows.size(); ++i) {
    names.push_back(numbered("flow_", i, ".flo"));
    write_flo(dir / names.back(), seq.flows[i]);
  }
  for (std::size_t i = 0; i < seq.masks.size(); ++i) {
    names.push_back(numbered("mask_", i, ".pgm"));
    write_mask(dir / names.back(), seq.masks[i]);
  }
  if (extras.backward_flows) {
    for (std::size_t i = 0; i < seq.backward_flows.size(); ++i) {
      names.push_back(numbered("bflow_", i, ".flo"));
      write_flo(dir / names.back(), seq.backward_flows[i]);
    }
  }
  if (extras.foreground) {
    for (std::size_t i = 0; i < seq.foreground.size(); ++i) {
      names.push_back(numbered("fg_", i, ".pgm"));
      write_mask(dir / names.back(), seq.foreground[i]);
    }
  }
  return names;
}

namespace {
std::size_t count_numbered(const fs::path& dir, const std::string& prefix, const std::string& ext) {
  std::size_t n = 0;
  while (fs::exists(dir / numbered(prefix, n, ext))) ++n;
  return n;
}
void expect_count(const fs::path& dir, const std::string& what, std::size_t found, std::size_t want) {
  if (found != want) {
    throw FormatError(dir.string() + ": found " + std::to_string(found) + " " + what + " files, expected " +
                      std::to_string(want));
  }
}
}  // namespace

VideoSequence read_sequence(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("sequence directory " + dir.string() + " does not exist");
  VideoSequence seq;
  const std::size_t T = count_numbered(dir, "frame_", ".ppm");
  if (T == 0) throw FormatError(dir.string() + ": no frame_0000.ppm");
  for (std::size_t i = 0; i < T; ++i) {
    Tensor f = read_image(dir / numbered("frame_", i, ".ppm"));
    if (f.dim(0) != 3) throw FormatError(dir.string() + ": frames must be RGB");
    seq.frames.push_back(std::move(f));
  }
  if (const std::size_t nf = count_numbered(dir, "flow_", ".flo"); nf > 0) {
    expect_count(dir, "flow", nf, T - 1);
    expect_count(dir, "mask", count_numbered(dir, "mask_", ".pgm"), T - 1);
    for (std::size_t i = 0; i + 1 < T; ++i) {
      seq.flows.push_back(read_flo(dir / numbered("flow_", i, ".flo")));
      seq.masks.push_back(read_mask(dir / numbered("mask_", i, ".pgm")));
    }
  }
  if (const std::size_t nb = count_numbered(dir, "bflow_", ".flo"); nb > 0) {
    expect_count(dir, "backward flow", nb, T - 1);
    for (std::size_t i = 0; i + 1 < T; ++i) seq.backward_flows.push_back(read_flo(dir / numbered("bflow_", i, ".flo")));
  }
  if (const std::size_t ng = count_numbered(dir, "fg_", ".pgm"); ng > 0) {
    expect_count(dir, "foreground", ng, T);
    for (std::size_t i = 0; i < T; ++i) seq.foreground.push_back(read_mask(dir / numbered("fg_", i, ".pgm")));
  }
  seq.validate();
  return seq;
}

}  // namespace sst::io
