#pragma once

#include <string>
#include <vector>

#include "stablestyle/autodiff/tensor.hpp"
#include "stablestyle/perceptual/feature_net.hpp"

namespace sst {

// [C,H,W] -> [C, H*W]; columns are per-pixel feature vectors.
Tensor feature_matrix(const FeatureMap& f);

// G = Phi Phi^T, [C, C].
Tensor gram(const FeatureMap& f);
Tensor gram_of_matrix(const Tensor& phi);

struct StyleGram {
  std::string layer;
  Tensor gram;  // [C, C]
  std::size_t channels = 0, height = 0, width = 0;
};

std::vector<StyleGram> style_grams(const std::vector<FeatureMap>& style_feats);

// sum_j 1/(C_j H_j W_j) ||phi_j(p) - phi_j(c)||^2
Tensor content_loss(const std::vector<FeatureMap>& p_feats, const std::vector<FeatureMap>& c_feats);

// sum_j 1/(C_j H_j W_j) ||G(phi_j(p)) - G_j(s)||_F^2, normalized by p's extents.
Tensor style_loss(const std::vector<FeatureMap>& p_feats, const std::vector<StyleGram>& grams);

// Features of a fixed style image and a fixed content image, precomputed once.
class PerceptualObjective {
 public:
  PerceptualObjective(const FeatureNet& net, const Tensor& style_image,
                      std::vector<std::string> style_taps = default_style_taps(),
                      std::vector<std::string> content_taps = default_content_taps());

  const FeatureNet& net() const { return *net_; }
  const std::vector<std::string>& style_taps() const { return style_taps_; }
  const std::vector<std::string>& content_taps() const { return content_taps_; }
  const std::vector<StyleGram>& grams() const { return grams_; }

  std::vector<FeatureMap> content_features(const Tensor& content) const;

  // lambda_c * Lc(p, c) + lambda_s * Ls(p, s); terms skipped when their weight is 0.
  Tensor image_loss(const Tensor& p, const std::vector<FeatureMap>& content_feats,
                    double lambda_c, double lambda_s) const;
  Tensor image_loss(const Tensor& p, const Tensor& content, double lambda_c, double lambda_s) const;

 private:
  const FeatureNet* net_;
  std::vector<std::string> style_taps_, content_taps_, all_taps_;
  std::vector<StyleGram> grams_;
};

}  // namespace sst
