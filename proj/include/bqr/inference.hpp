#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "bqr/core_model.hpp"
#include "bqr/priors.hpp"
#include "bqr/qr_solver.hpp"
#include "bqr/sampler.hpp"

namespace bqr {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.0;  // 1 - alpha

  bool contains(double v) const noexcept { return lo <= v && v <= hi; }
  double length() const noexcept { return hi - lo; }
};

struct PriorChoice {
  PriorFamily family = PriorFamily::ClippedAbsolute;
  double lambda = 0.0;  // ignored for Flat
};

struct PosteriorSummary {
  std::vector<std::string> names;
  Eigen::Index n = 0;
  double tau = 0.5;
  double alpha = 0.1;
  PriorChoice prior;

  CoefVector beta_hat;    // full-model quantile regression fit
  CoefVector beta_check;  // posterior mean
  Matrix sigma_check;     // posterior covariance
  Matrix d_hat;
  Matrix sigma_adj;
  Vector eta;
  std::vector<Interval> intervals;

  Diagnostics diagnostics;
  double acceptance_rate = 0.0;
  // Soft failure: max split-Rhat > 1.05, min ESS < 100, or diagnostics unavailable.
  bool soft_fail = false;
  std::vector<std::string> flags;

  Vector se_adj() const { return sigma_adj.diagonal().cwiseMax(0.0).cwiseSqrt(); }
};

/// Pooled sample mean and covariance (denominator m - 1). Needs m >= 2.
std::pair<CoefVector, Matrix> posterior_moments(const Matrix& draws);

/// (1/n) sum_i x_i x_i'. With observation weights this becomes
/// (1/n) sum_i zeta_i^2 x_i x_i', the score variance of the weighted loss.
Matrix compute_d_hat(const Dataset& data);

/// n tau (1 - tau) Sigma D Sigma, symmetrized.
Matrix adjust_covariance(const Matrix& sigma_check, const Matrix& d_hat, Eigen::Index n, QuantileLevel tau);

/// eta_j = min{ sqrt(n) lambda, max{1, lambda / |beta_hat_j|} }, with lambda / 0 = +inf.
double adjustment_weight(double lambda, Eigen::Index n, double beta_hat_j);

/// eta for every coefficient: 1 for the intercept and for a flat prior.
Vector adjustment_weights(const PriorChoice& prior, Eigen::Index n, const CoefVector& beta_hat);

/// Standard normal quantile function (Wichura's AS 241 rational approximation).
double normal_quantile(double p);

/// beta_check_j +/- z_{alpha/2} eta_j sqrt(Sigma_adj(j, j)).
std::vector<Interval> confidence_intervals(const CoefVector& beta_check, const Matrix& sigma_adj,
                                           const Vector& eta, double alpha);

/// Whole pipeline: full QR fit, prior construction, sampling, moments,
/// sandwich adjustment, adjustment weights and intervals.
PosteriorSummary fit_and_infer(const Dataset& data, QuantileLevel tau, const PriorChoice& prior,
                               const SamplerConfig& cfg, double alpha);

PriorSpec build_prior(const PriorChoice& prior, const Dataset& data, const CoefVector& beta_hat);

nlohmann::json summary_to_json(const PosteriorSummary& summary);
void write_summary_csv(std::ostream& out, const PosteriorSummary& summary);

}  // namespace bqr
