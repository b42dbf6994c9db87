#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stablestyle/autodiff/tensor.hpp"
#include "stablestyle/perceptual/feature_net.hpp"

namespace sst::geometry {

// J(Phi_p) = ||Phi_p Phi_p^T - Phi_s Phi_s^T||_F^2 with the target Gram cached.
class GramObjective {
 public:
  explicit GramObjective(const Tensor& target);

  // Differentiable w.r.t. phi_p.
  Tensor operator()(const Tensor& phi_p) const;
  double value(const Tensor& phi_p) const;

  const Tensor& target() const { return target_; }
  const Tensor& target_gram() const { return target_gram_; }
  // ||Phi_s Phi_s^T||_F^2, the scale used by relative tolerances.
  double target_gram_norm2() const { return gram_norm2_; }

 private:
  Tensor target_;
  Tensor target_gram_;
  double gram_norm2_ = 0.0;
};

Tensor objective(const Tensor& phi_p, const Tensor& phi_s);

// sqrt(Tr(Phi_s Phi_s^T)) == ||Phi_s||_F.
double solution_radius(const Tensor& phi_s);
double gram_trace(const Tensor& phi);

// Haar-distributed n x n orthogonal matrix: QR of a seeded Gaussian matrix
// with the signs of diag(R) folded into Q.
Tensor haar_orthogonal(std::size_t n, std::uint64_t seed);

// Phi_s U for an explicit orthogonal U ([HW, HW]).
Tensor orbit_point(const Tensor& phi_s, const Tensor& u);
Tensor orbit_sample(const Tensor& phi_s, std::uint64_t seed);

struct SphereCertificate {
  double radius = 0.0;
  double trace = 0.0;
  std::vector<Tensor> points;
  double max_pairwise_distance = 0.0;
};

// Samples `samples` orbit points plus the antipode -Phi_s and records the
// largest pairwise Frobenius distance among them (the orbit diameter probe).
SphereCertificate certify_orbit(const Tensor& phi_s, std::size_t samples, std::uint64_t seed);

double frobenius_distance(const Tensor& a, const Tensor& b);

struct MinimizeOptions {
  std::size_t steps = 2000;
  double lr = 1e-2;
  // Cosine decay of the step size to zero over the run.
  bool cosine_decay = true;
};

struct MinimizeResult {
  Tensor phi;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  double final_norm = 0.0;
};

// Adam descent on J from `init`. Throws NumericError if J ever exceeds ten
// times its initial value (or of J(0) = ||Phi_s Phi_s^T||^2, if larger).
MinimizeResult minimize_objective(const Tensor& phi_s, const Tensor& init,
                                  const MinimizeOptions& options = {});

struct TraceRow {
  std::string tap;
  double trace = 0.0;
  double radius = 0.0;
};

std::vector<TraceRow> trace_report(const Tensor& style_image, const FeatureNet& net,
                                   const std::vector<std::string>& taps);

}  // namespace sst::geometry
