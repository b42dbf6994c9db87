#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stablestyle/autodiff/rng.hpp"
#include "stablestyle/autodiff/tensor.hpp"
#include "stablestyle/io/weights.hpp"

namespace sst {

enum class LayerKind { Conv, Relu, AvgPool };

struct LayerSpec {
  LayerKind kind = LayerKind::Conv;
  std::string tap;  // non-empty when the layer's output is exposed
  std::size_t stride = 1;
  Tensor weight;  // conv only
  Tensor bias;    // conv only
};

struct FeatureMap {
  std::string layer;
  Tensor value;  // [C, H, W]
};

// Frozen feature extractor standing in for the loss network. Weights never
// require grad; gradients flow only to the image argument.
class FeatureNet {
 public:
  FeatureNet() = default;
  explicit FeatureNet(std::vector<LayerSpec> layers);

  // conv3x3(3->16)+relu [r1], conv3x3(16->16, stride 2)+relu [r2],
  // conv3x3(16->32)+relu [r3], Kaiming init, zero bias.
  static FeatureNet small_vgg(std::uint64_t seed);

  // Layout tensor "arch.layout" holds one code per stage:
  // 1 = conv stride 1 + relu, 2 = conv stride 2 + relu, 3 = 2x2 average pool.
  // Conv stages read "convN.weight" / "convN.bias"; relus are tapped "rN".
  static FeatureNet from_weights(const NamedTensors& tensors);
  NamedTensors to_weights() const;

  std::vector<FeatureMap> extract(const Tensor& image, const std::vector<std::string>& taps) const;
  std::vector<std::string> tap_names() const;
  bool has_tap(const std::string& tap) const;

  // Content hash of all weights; used to assert the net is never mutated.
  std::uint64_t fingerprint() const;

  const std::vector<LayerSpec>& layers() const { return layers_; }

 private:
  std::vector<LayerSpec> layers_;
};

inline const std::vector<std::string>& default_style_taps() {
  static const std::vector<std::string> taps{"r1", "r2"};
  return taps;
}
inline const std::vector<std::string>& default_content_taps() {
  static const std::vector<std::string> taps{"r3"};
  return taps;
}

}  // namespace sst
