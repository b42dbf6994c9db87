#pragma once

#include <vector>

#include "stablestyle/autodiff/tensor.hpp"
#include "stablestyle/flow/flow.hpp"

namespace sst {

// Frames c_1..c_T ([3,H,W] in [0,1]) with optional per-pair ground truth.
// flows[i], backward_flows[i] and masks[i] relate frames i and i+1.
struct VideoSequence {
  std::vector<Tensor> frames;
  std::vector<FlowField> flows;
  std::vector<FlowField> backward_flows;
  std::vector<OcclusionMask> masks;
  std::vector<OcclusionMask> foreground;  // per frame, 1 = foreground object

  std::size_t length() const { return frames.size(); }
  std::size_t height() const { return frames.empty() ? 0 : frames.front().dim(1); }
  std::size_t width() const { return frames.empty() ? 0 : frames.front().dim(2); }
  bool has_flows() const { return !frames.empty() && flows.size() + 1 == frames.size() &&
                                  masks.size() == flows.size(); }

  // Uniform extents; flow/mask counts T-1 when present; foreground count T when present.
  void validate() const;

  // Frames [begin, begin + count) with the matching flows and masks.
  VideoSequence slice(std::size_t begin, std::size_t count) const;
};

}  // namespace sst
