#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "stablestyle/autodiff/tensor.hpp"
#include "stablestyle/flow/video.hpp"

// On-disk sequence layout, numbered from 0:
//   frame_0000.ppm ...      frames
//   flow_0000.flo ...       flow from frame i to frame i+1 (optional)
//   mask_0000.pgm ...       occlusion mask for that pair (with the flows)
//   bflow_0000.flo ...      backward flow for that pair (optional)
//   fg_0000.pgm ...         per-frame foreground mask (optional)
namespace sst::io {

std::string numbered(const std::string& prefix, std::size_t index, const std::string& ext);

struct SequenceExtras {
  bool foreground = false;
  bool backward_flows = false;
};

// Returns the written file names relative to dir.
std::vector<std::string> write_sequence(const std::filesystem::path& dir, const VideoSequence& seq,
                                        const SequenceExtras& extras = {});
std::vector<std::string> write_frames(const std::filesystem::path& dir, const std::vector<Tensor>& frames);

VideoSequence read_sequence(const std::filesystem::path& dir);

}  // namespace sst::io
