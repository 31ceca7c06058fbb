#include "bqr/priors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace bqr {

PriorFamily parse_prior_family(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "al" || lower == "adaptive-lasso") return PriorFamily::AdaptiveLasso;
  if (lower == "ca" || lower == "clipped-absolute") return PriorFamily::ClippedAbsolute;
  if (lower == "flat") return PriorFamily::Flat;
  throw DataError("unknown prior family '" + std::string(name) + "' (expected al, ca or flat)");
}

std::string to_string(PriorFamily family) {
  switch (family) {
    case PriorFamily::AdaptiveLasso: return "al";
    case PriorFamily::ClippedAbsolute: return "ca";
    case PriorFamily::Flat: return "flat";
  }
  return "unknown";
}

PriorSpec::PriorSpec(PriorFamily family, double lambda, Vector weights, Eigen::Index n)
    : family_(family), lambda_(lambda), weights_(std::move(weights)), n_(n) {
  if (n_ < 1) throw DataError("prior sample size must be positive");
  if (family_ != PriorFamily::Flat && !(std::isfinite(lambda_) && lambda_ > 0.0)) {
    throw DataError("shrinkage prior needs a positive finite lambda");
  }
  for (Eigen::Index j = 0; j < weights_.size(); ++j) {
    if (!(std::isfinite(weights_(j)) && weights_(j) > 0.0)) {
      throw DataError("adaptive weights must be positive and finite");
    }
  }
}

PriorSpec PriorSpec::adaptive_lasso(double lambda, Vector weights, Eigen::Index n) {
  return PriorSpec(PriorFamily::AdaptiveLasso, lambda, std::move(weights), n);
}

PriorSpec PriorSpec::clipped_absolute(double lambda, Eigen::Index p, Eigen::Index n) {
  return PriorSpec(PriorFamily::ClippedAbsolute, lambda, Vector::Ones(p), n);
}

PriorSpec PriorSpec::flat(Eigen::Index p) { return PriorSpec(PriorFamily::Flat, 0.0, Vector::Ones(p), 1); }

Vector adaptive_weights(const CoefVector& beta_hat, double floor) {
  if (beta_hat.size() < 1) throw DimensionError("coefficient vector must include the intercept");
  const Eigen::Index p = beta_hat.size() - 1;
  Vector w(p);
  for (Eigen::Index j = 0; j < p; ++j) w(j) = 1.0 / std::max(std::abs(beta_hat(j + 1)), floor);
  return w;
}

double log_prior(const PriorSpec& spec, const CoefVector& beta) {
  if (beta.size() != spec.p() + 1) {
    throw DimensionError("prior covers " + std::to_string(spec.p()) + " slopes but beta has " +
                         std::to_string(beta.size() - 1));
  }
  const auto slopes = beta.tail(spec.p());
  const double lambda = spec.lambda();
  const double n = static_cast<double>(spec.n());
  switch (spec.family()) {
    case PriorFamily::Flat:
      return 0.0;
    case PriorFamily::AdaptiveLasso:
      return -std::sqrt(n) * lambda * spec.weights().cwiseProduct(slopes.cwiseAbs()).sum();
    case PriorFamily::ClippedAbsolute: {
      double total = 0.0;
      for (Eigen::Index j = 0; j < slopes.size(); ++j) total += std::min(std::abs(slopes(j)), lambda);
      return -n * lambda * total;
    }
  }
  return 0.0;
}

}  // namespace bqr
