#pragma once

#include <string>
#include <string_view>

#include "bqr/core_model.hpp"

namespace bqr {

enum class PriorFamily { AdaptiveLasso, ClippedAbsolute, Flat };

PriorFamily parse_prior_family(std::string_view name);
std::string to_string(PriorFamily family);

/// Shrinkage prior on the slopes; the intercept always gets an improper flat prior.
///
/// Adaptive lasso:    log pi = -sqrt(n) * lambda * sum_j w_j |beta_j|
/// Clipped absolute:  log pi = -n * sum_j lambda * min(|beta_j|, lambda)
/// Both are unnormalized; only differences in beta matter to the sampler.
class PriorSpec {
 public:
  static PriorSpec adaptive_lasso(double lambda, Vector weights, Eigen::Index n);
  static PriorSpec clipped_absolute(double lambda, Eigen::Index p, Eigen::Index n);
  static PriorSpec flat(Eigen::Index p);

  PriorFamily family() const noexcept { return family_; }
  double lambda() const noexcept { return lambda_; }
  // Penalty weights w_1..w_p (all ones unless adaptive lasso).
  const Vector& weights() const noexcept { return weights_; }
  Eigen::Index n() const noexcept { return n_; }
  Eigen::Index p() const noexcept { return weights_.size(); }

 private:
  PriorSpec(PriorFamily family, double lambda, Vector weights, Eigen::Index n);

  PriorFamily family_;
  double lambda_;
  Vector weights_;
  Eigen::Index n_;
};

/// w_j = 1 / max(|beta_hat_j|, floor), j = 1..p. Returns a length-p vector.
Vector adaptive_weights(const CoefVector& beta_hat, double floor = 1e-8);

double log_prior(const PriorSpec& spec, const CoefVector& beta);

}  // namespace bqr
