#include "stablestyle/geometry/gram_geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "stablestyle/autodiff/adam.hpp"
#include "stablestyle/autodiff/ops.hpp"
#include "stablestyle/autodiff/rng.hpp"
#include "stablestyle/errors.hpp"
#include "stablestyle/perceptual/losses.hpp"

namespace sst::geometry {

namespace {
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) throw InvalidArgument(std::string(what) + ": feature matrix must be [C, HW]");
}
}  // namespace

GramObjective::GramObjective(const Tensor& target) : target_(target.detach()) {
  require_matrix(target_, "gram objective");
  NoGradGuard no_grad;
  target_gram_ = gram_of_matrix(target_);
  for (double v : target_gram_.values()) gram_norm2_ += v * v;
}

Tensor GramObjective::operator()(const Tensor& phi_p) const {
  require_matrix(phi_p, "gram objective");
  if (phi_p.shape() != target_.shape()) {
    throw InvalidArgument("gram objective: shape " + shape_str(phi_p.shape()) +
                          " does not match target " + shape_str(target_.shape()));
  }
  return ops::squared_distance(gram_of_matrix(phi_p), target_gram_);
}

double GramObjective::value(const Tensor& phi_p) const {
  NoGradGuard no_grad;
  return (*this)(phi_p).item();
}

Tensor objective(const Tensor& phi_p, const Tensor& phi_s) { return GramObjective(phi_s)(phi_p); }

double gram_trace(const Tensor& phi) {
  double s = 0.0;
  for (double v : phi.values()) s += v * v;
  return s;
}

double solution_radius(const Tensor& phi_s) { return std::sqrt(gram_trace(phi_s)); }

Tensor haar_orthogonal(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  // Column-major fill order is irrelevant for the distribution.
  Eigen::MatrixXd a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (std::size_t j = 0; j < n; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  std::vector<double> values(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) values[i * n + j] = q(i, j);
  return Tensor({n, n}, std::move(values));
}

Tensor orbit_point(const Tensor& phi_s, const Tensor& u) {
  require_matrix(phi_s, "orbit_point");
  if (u.rank() != 2 || u.dim(0) != phi_s.dim(1) || u.dim(1) != phi_s.dim(1)) {
    throw InvalidArgument("orbit_point: U must be [HW, HW]");
  }
  NoGradGuard no_grad;
  return ops::matmul(phi_s, u).detach();
}

Tensor orbit_sample(const Tensor& phi_s, std::uint64_t seed) {
  require_matrix(phi_s, "orbit_sample");
  return orbit_point(phi_s, haar_orthogonal(phi_s.dim(1), seed));
}

double frobenius_distance(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw InvalidArgument("frobenius_distance: shape mismatch");
  double s = 0.0;
  auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) s += (av[i] - bv[i]) * (av[i] - bv[i]);
  return std::sqrt(s);
}

SphereCertificate certify_orbit(const Tensor& phi_s, std::size_t samples, std::uint64_t seed) {
  SphereCertificate cert;
  cert.trace = gram_trace(phi_s);
  cert.radius = std::sqrt(cert.trace);
  Rng rng(seed);
  cert.points.push_back(phi_s.detach());
  {
    NoGradGuard no_grad;
    cert.points.push_back(ops::scale(phi_s, -1.0).detach());
  }
  for (std::size_t i = 0; i < samples; ++i) cert.points.push_back(orbit_sample(phi_s, rng.next()));
  for (std::size_t i = 0; i < cert.points.size(); ++i)
    for (std::size_t j = i + 1; j < cert.points.size(); ++j)
      cert.max_pairwise_distance =
          std::max(cert.max_pairwise_distance, frobenius_distance(cert.points[i], cert.points[j]));
  return cert;
}

MinimizeResult minimize_objective(const Tensor& phi_s, const Tensor& init,
                                  const MinimizeOptions& options) {
  if (options.steps < 1) throw InvalidArgument("minimize_objective: steps must be >= 1");
  GramObjective objective(phi_s);
  Tensor phi = init.clone(true);
  MinimizeResult result;
  result.initial_objective = objective.value(phi);
  AdamState state = AdamState::zeros(phi.numel());
  // Adam jitters around a minimum, so "10x" against an init already on the
  // orbit (J at rounding level) would misfire. J at the origin is the scale.
  const double floor = std::max(objective.target_gram_norm2(), 1e-300);
  for (std::size_t step = 0; step < options.steps; ++step) {
    phi.zero_grad();
    Tensor j = objective(phi);
    const double current = j.item();
    if (current > 10.0 * std::max(result.initial_objective, floor)) {
      throw NumericError("minimize_objective: objective diverged (" + std::to_string(current) +
                         " vs initial " + std::to_string(result.initial_objective) + ")");
    }
    j.backward();
    AdamConfig cfg{options.lr};
    if (options.cosine_decay) {
      const double t = static_cast<double>(step) / static_cast<double>(options.steps);
      cfg.lr = std::max(options.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * t)), 1e-12);
    }
    const auto g = phi.grad();
    adam_step(phi.mutable_values(), g, state, cfg);
  }
  phi.zero_grad();
  result.final_objective = objective.value(phi);
  result.final_norm = solution_radius(phi);
  result.phi = phi.detach();
  return result;
}

std::vector<TraceRow> trace_report(const Tensor& style_image, const FeatureNet& net,
                                   const std::vector<std::string>& taps) {
  NoGradGuard no_grad;
  std::vector<TraceRow> rows;
  for (const auto& f : net.extract(style_image, taps)) {
    const Tensor g = gram(f);
    double tr = 0.0;
    for (std::size_t i = 0; i < g.dim(0); ++i) tr += g.values()[i * g.dim(0) + i];
    rows.push_back({f.layer, tr, std::sqrt(tr)});
  }
  return rows;
}

}  // namespace sst::geometry
