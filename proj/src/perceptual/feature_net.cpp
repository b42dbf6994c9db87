#include "stablestyle/perceptual/feature_net.hpp"

#include <algorithm>
#include <cstring>
#include <set>

#include "stablestyle/autodiff/ops.hpp"
#include "stablestyle/errors.hpp"

namespace sst {

FeatureNet::FeatureNet(std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
  std::set<std::string> taps;
  for (auto& l : layers_) {
    if (!l.tap.empty() && !taps.insert(l.tap).second) {
      throw InvalidArgument("feature net: duplicate tap '" + l.tap + "'");
    }
    if (l.kind == LayerKind::Conv) {
      if (!l.weight.defined() || !l.bias.defined() || l.weight.rank() != 4) {
        throw InvalidArgument("feature net: conv layer without weights");
      }
      // Frozen: private copies that never track gradients.
      l.weight = l.weight.clone(false);
      l.bias = l.bias.clone(false);
    }
  }
}

FeatureNet FeatureNet::small_vgg(std::uint64_t seed) {
  Rng rng(seed);
  auto conv = [&](std::size_t in, std::size_t out, std::size_t stride) {
    LayerSpec l;
    l.kind = LayerKind::Conv;
    l.stride = stride;
    l.weight = kaiming_conv_weight(out, in, 3, rng, false);
    l.bias = Tensor::zeros({out});
    return l;
  };
  auto relu = [](std::string tap) {
    LayerSpec l;
    l.kind = LayerKind::Relu;
    l.tap = std::move(tap);
    return l;
  };
  return FeatureNet({conv(3, 16, 1), relu("r1"), conv(16, 16, 2), relu("r2"), conv(16, 32, 1),
                     relu("r3")});
}

FeatureNet FeatureNet::from_weights(const NamedTensors& tensors) {
  const Tensor& layout = find_tensor(tensors, "arch.layout");
  std::vector<LayerSpec> layers;
  std::size_t conv_index = 0, pool_index = 0;
  for (double code : layout.values()) {
    const int c = static_cast<int>(code);
    if (c != code || c < 1 || c > 3) throw FormatError("feature net: bad layout code");
    if (c == 3) {
      LayerSpec pool;
      pool.kind = LayerKind::AvgPool;
      pool.tap = "p" + std::to_string(++pool_index);
      layers.push_back(std::move(pool));
      continue;
    }
    ++conv_index;
    const auto id = std::to_string(conv_index);
    LayerSpec conv;
    conv.kind = LayerKind::Conv;
    conv.stride = static_cast<std::size_t>(c);
    conv.weight = find_tensor(tensors, "conv" + id + ".weight");
    conv.bias = find_tensor(tensors, "conv" + id + ".bias");
    if (conv.weight.rank() != 4 || conv.bias.numel() != conv.weight.dim(0)) {
      throw FormatError("feature net: inconsistent conv" + id + " tensors");
    }
    layers.push_back(std::move(conv));
    LayerSpec relu;
    relu.kind = LayerKind::Relu;
    relu.tap = "r" + id;
    layers.push_back(std::move(relu));
  }
  return FeatureNet(std::move(layers));
}

NamedTensors FeatureNet::to_weights() const {
  NamedTensors out;
  std::vector<double> layout;
  std::size_t conv_index = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.kind == LayerKind::AvgPool) {
      layout.push_back(3);
    } else if (l.kind == LayerKind::Conv) {
      if (i + 1 >= layers_.size() || layers_[i + 1].kind != LayerKind::Relu) {
        throw InvalidArgument("feature net: only conv+relu stages can be serialized");
      }
      layout.push_back(static_cast<double>(l.stride));
      const auto id = std::to_string(++conv_index);
      out.push_back({"conv" + id + ".weight", l.weight});
      out.push_back({"conv" + id + ".bias", l.bias});
    }
  }
  out.insert(out.begin(), NamedTensor{"arch.layout", Tensor({layout.size()}, layout)});
  return out;
}

std::vector<std::string> FeatureNet::tap_names() const {
  std::vector<std::string> names;
  for (const auto& l : layers_)
    if (!l.tap.empty()) names.push_back(l.tap);
  return names;
}

bool FeatureNet::has_tap(const std::string& tap) const {
  return std::any_of(layers_.begin(), layers_.end(), [&](const LayerSpec& l) { return l.tap == tap; });
}

std::vector<FeatureMap> FeatureNet::extract(const Tensor& image,
                                            const std::vector<std::string>& taps) const {
  std::size_t last = 0;
  for (const auto& t : taps) {
    auto it = std::find_if(layers_.begin(), layers_.end(),
                           [&](const LayerSpec& l) { return l.tap == t; });
    if (it == layers_.end()) throw InvalidArgument("feature net: unknown tap '" + t + "'");
    last = std::max(last, static_cast<std::size_t>(it - layers_.begin()) + 1);
  }
  std::vector<FeatureMap> out;
  Tensor x = image;
  for (std::size_t i = 0; i < last; ++i) {
    const auto& l = layers_[i];
    switch (l.kind) {
      case LayerKind::Conv:
        x = ops::conv2d(x, l.weight, l.bias, l.stride, (l.weight.dim(2) - 1) / 2);
        break;
      case LayerKind::Relu:
        x = ops::relu(x);
        break;
      case LayerKind::AvgPool:
        x = ops::avg_pool2x2(x);
        break;
    }
    if (!l.tap.empty() && std::find(taps.begin(), taps.end(), l.tap) != taps.end()) {
      out.push_back({l.tap, x});
    }
  }
  return out;
}

std::uint64_t FeatureNet::fingerprint() const {
  // FNV-1a over the raw weight bytes.
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const Tensor& t) {
    for (double v : t.values()) {
      unsigned char b[sizeof(double)];
      std::memcpy(b, &v, sizeof(double));
      for (auto c : b) h = (h ^ c) * 1099511628211ULL;
    }
  };
  for (const auto& l : layers_) {
    if (l.kind != LayerKind::Conv) continue;
    mix(l.weight);
    mix(l.bias);
  }
  return h;
}

}  // namespace sst
