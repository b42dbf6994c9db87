#include "stablestyle/perceptual/losses.hpp"

#include <Eigen/Core>
#include <algorithm>

#include "stablestyle/autodiff/ops.hpp"
#include "stablestyle/errors.hpp"

namespace sst {

namespace {
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatMap = Eigen::Map<const RowMatrix>;
using MatMap = Eigen::Map<RowMatrix>;

double inv_chw(const Tensor& f) {
  return 1.0 / static_cast<double>(f.dim(0) * f.dim(1) * f.dim(2));
}
}  // namespace

Tensor feature_matrix(const FeatureMap& f) {
  if (f.value.rank() != 3) throw InvalidArgument("feature map must be [C,H,W]");
  return ops::reshape(f.value, {f.value.dim(0), f.value.dim(1) * f.value.dim(2)});
}

Tensor gram_of_matrix(const Tensor& phi) {
  if (phi.rank() != 2) throw InvalidArgument("gram: feature matrix must be rank 2");
  const std::size_t C = phi.dim(0), N = phi.dim(1);
  std::vector<double> out(C * C);
  ConstMatMap p(phi.values().data(), C, N);
  MatMap g(out.data(), C, C);
  g.noalias() = p * p.transpose();
  // Exact symmetry regardless of GEMM blocking.
  for (std::size_t i = 0; i < C; ++i)
    for (std::size_t j = i + 1; j < C; ++j) g(j, i) = g(i, j);
  return detail::make_result({C, C}, std::move(out), {phi}, [C, N](detail::Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    ConstMatMap dg(n.grad.data(), C, C);
    ConstMatMap p(n.inputs[0]->value.data(), C, N);
    MatMap(n.inputs[0]->grad_buffer().data(), C, N).noalias() += (dg + dg.transpose()) * p;
  });
}

Tensor gram(const FeatureMap& f) { return gram_of_matrix(feature_matrix(f)); }

std::vector<StyleGram> style_grams(const std::vector<FeatureMap>& style_feats) {
  std::vector<StyleGram> out;
  NoGradGuard no_grad;
  for (const auto& f : style_feats) {
    out.push_back({f.layer, gram(f).detach(), f.value.dim(0), f.value.dim(1), f.value.dim(2)});
  }
  return out;
}

Tensor content_loss(const std::vector<FeatureMap>& p_feats, const std::vector<FeatureMap>& c_feats) {
  if (p_feats.size() != c_feats.size()) throw InvalidArgument("content_loss: layer count mismatch");
  Tensor total;
  for (std::size_t j = 0; j < p_feats.size(); ++j) {
    const auto& p = p_feats[j];
    const auto& c = c_feats[j];
    if (p.layer != c.layer || p.value.shape() != c.value.shape()) {
      throw InvalidArgument("content_loss: layer mismatch at '" + p.layer + "' vs '" + c.layer + "'");
    }
    Tensor term = ops::scale(ops::squared_distance(p.value, c.value), inv_chw(p.value));
    total = total.defined() ? ops::add(total, term) : term;
  }
  return total.defined() ? total : Tensor::scalar(0.0);
}

Tensor style_loss(const std::vector<FeatureMap>& p_feats, const std::vector<StyleGram>& grams) {
  if (p_feats.size() != grams.size()) throw InvalidArgument("style_loss: layer count mismatch");
  Tensor total;
  for (std::size_t j = 0; j < p_feats.size(); ++j) {
    const auto& p = p_feats[j];
    if (p.layer != grams[j].layer || p.value.dim(0) != grams[j].gram.dim(0)) {
      throw InvalidArgument("style_loss: layer mismatch at '" + p.layer + "' vs '" +
                            grams[j].layer + "'");
    }
    Tensor term = ops::scale(ops::squared_distance(gram(p), grams[j].gram), inv_chw(p.value));
    total = total.defined() ? ops::add(total, term) : term;
  }
  return total.defined() ? total : Tensor::scalar(0.0);
}

PerceptualObjective::PerceptualObjective(const FeatureNet& net, const Tensor& style_image,
                                         std::vector<std::string> style_taps,
                                         std::vector<std::string> content_taps)
    : net_(&net), style_taps_(std::move(style_taps)), content_taps_(std::move(content_taps)) {
  for (const auto& names : {style_taps_, content_taps_})
    for (const auto& t : names)
      if (!net.has_tap(t)) throw InvalidArgument("unknown tap '" + t + "'");
  {
    NoGradGuard no_grad;
    grams_ = style_grams(net.extract(style_image, style_taps_));
  }
  for (const auto& t : net.tap_names()) {
    const bool used = std::find(style_taps_.begin(), style_taps_.end(), t) != style_taps_.end() ||
                      std::find(content_taps_.begin(), content_taps_.end(), t) != content_taps_.end();
    if (used) all_taps_.push_back(t);
  }
}

std::vector<FeatureMap> PerceptualObjective::content_features(const Tensor& content) const {
  NoGradGuard no_grad;
  auto feats = net_->extract(content, content_taps_);
  for (auto& f : feats) f.value = f.value.detach();
  return feats;
}

Tensor PerceptualObjective::image_loss(const Tensor& p, const std::vector<FeatureMap>& content_feats,
                                       double lambda_c, double lambda_s) const {
  if (lambda_c < 0 || lambda_s < 0) throw InvalidArgument("image_loss: weights must be non-negative");
  std::vector<std::string> wanted;
  if (lambda_c > 0) wanted.insert(wanted.end(), content_taps_.begin(), content_taps_.end());
  if (lambda_s > 0) wanted.insert(wanted.end(), style_taps_.begin(), style_taps_.end());
  if (wanted.empty()) return ops::scale(ops::sum(p), 0.0);
  auto feats = net_->extract(p, wanted);
  auto pick = [&](const std::vector<std::string>& names) {
    std::vector<FeatureMap> out;
    for (const auto& name : names)
      for (const auto& f : feats)
        if (f.layer == name) out.push_back(f);
    return out;
  };
  Tensor total;
  if (lambda_c > 0) total = ops::scale(content_loss(pick(content_taps_), content_feats), lambda_c);
  if (lambda_s > 0) {
    Tensor s = ops::scale(style_loss(pick(style_taps_), grams_), lambda_s);
    total = total.defined() ? ops::add(total, s) : s;
  }
  return total;
}

Tensor PerceptualObjective::image_loss(const Tensor& p, const Tensor& content, double lambda_c,
                                       double lambda_s) const {
  return image_loss(p, content_features(content), lambda_c, lambda_s);
}

}  // namespace sst
