#include "stablestyle/flow/video.hpp"

#include "stablestyle/errors.hpp"

namespace sst {

void VideoSequence::validate() const {
  if (frames.empty()) throw InvalidArgument("video sequence: no frames");
  const auto& s = frames.front().shape();
  if (s.size() != 3) throw InvalidArgument("video sequence: frames must be [C,H,W]");
  for (const auto& f : frames)
    if (f.shape() != s) throw InvalidArgument("video sequence: frame extents differ");
  const std::size_t pairs = frames.size() - 1;
  if (!flows.empty() && flows.size() != pairs) throw InvalidArgument("video sequence: need T-1 flows");
  if (!masks.empty() && masks.size() != pairs) throw InvalidArgument("video sequence: need T-1 masks");
  if (!backward_flows.empty() && backward_flows.size() != pairs) {
    throw InvalidArgument("video sequence: need T-1 backward flows");
  }
  if (!foreground.empty() && foreground.size() != frames.size()) {
    throw InvalidArgument("video sequence: need T foreground masks");
  }
  for (const auto& f : flows)
    if (f.height != s[1] || f.width != s[2]) throw InvalidArgument("video sequence: flow extent differs");
  for (const auto& m : masks)
    if (m.height != s[1] || m.width != s[2]) throw InvalidArgument("video sequence: mask extent differs");
  for (const auto& m : foreground)
    if (m.height != s[1] || m.width != s[2]) {
      throw InvalidArgument("video sequence: foreground extent differs");
    }
}

VideoSequence VideoSequence::slice(std::size_t begin, std::size_t count) const {
  if (count == 0 || begin + count > frames.size()) throw InvalidArgument("video sequence: bad slice");
  VideoSequence out;
  out.frames.assign(frames.begin() + begin, frames.begin() + begin + count);
  auto pairs = [&](const auto& v) {
    using V = std::decay_t<decltype(v)>;
    if (v.empty()) return V{};
    return V(v.begin() + begin, v.begin() + begin + count - 1);
  };
  out.flows = pairs(flows);
  out.backward_flows = pairs(backward_flows);
  out.masks = pairs(masks);
  if (!foreground.empty()) {
    out.foreground.assign(foreground.begin() + begin, foreground.begin() + begin + count);
  }
  return out;
}

}  // namespace sst
