#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "bqr/core_model.hpp"
#include "bqr/priors.hpp"

namespace bqr {

struct SamplerConfig {
  int chains = 4;
  int iterations = 20000;  // per chain, including burn-in
  int burnin = 10000;
  int thinning = 1;
  std::uint64_t seed = 0;
  // Multiplies the curvature-based initial proposal covariance (as a standard deviation).
  double initial_scale = 1.0;
  // Burn-in iterations between proposal covariance refreshes.
  int adapt_window = 100;
  double target_acceptance = 0.234;
  // Run chains on separate threads; harmless to disable when the caller already parallelizes.
  bool parallel_chains = true;

  void validate() const;
  int draws_per_chain() const { return (iterations - burnin) / thinning; }
};

/// Post-burn-in draws, rows grouped by chain: chain c owns rows
/// [c * draws_per_chain, (c + 1) * draws_per_chain).
struct Chain {
  Matrix draws;
  Vector log_post;
  int chains = 0;
  int draws_per_chain = 0;
  std::vector<double> acceptance;  // post-burn-in acceptance per chain
  double acceptance_rate = 0.0;    // pooled
  // Set when the pooled acceptance rate falls outside [0.05, 0.95].
  bool acceptance_warning = false;
  // Proposal refreshes per chain, and the last iteration at which one happened.
  std::vector<int> adaptation_updates;
  std::vector<int> last_adaptation_iteration;
  std::vector<Matrix> final_proposal;  // frozen proposal covariance per chain

  Eigen::Index dim() const { return draws.cols(); }
  auto chain_block(int c) const {
    return draws.middleRows(static_cast<Eigen::Index>(c) * draws_per_chain, draws_per_chain);
  }
};

using LogDensity = std::function<double(const Vector&)>;

/// Adaptive random-walk Metropolis on an arbitrary log density.
///
/// Proposal: beta' = beta + sqrt(s) * L z with L L' the proposal covariance.
/// During burn-in the covariance is refreshed every adapt_window iterations
/// from the running sample covariance of the chain, and log s follows a
/// Robbins-Monro recursion towards the target acceptance rate. Both are frozen
/// at the end of burn-in. Each chain starts at `start` plus Gaussian jitter of
/// 0.1 * chol(initial_covariance) and draws from its own engine keyed by
/// (seed, chain index), so results do not depend on scheduling.
Chain sample_log_density(const LogDensity& log_density, const Vector& start,
                         const Matrix& initial_covariance, const SamplerConfig& cfg);

/// Log posterior -L_n(beta) + log pi(beta).
double log_posterior(const Dataset& data, QuantileLevel tau, const PriorSpec& prior,
                     const CoefVector& beta);

/// Posterior draws for the working-likelihood posterior, started at the full
/// quantile regression fit `start`. The initial proposal covariance is
/// initial_scale^2 * (L_n(start) / (n tau (1 - tau))) * (X' diag(zeta) X)^{-1}.
Chain run_chains(const Dataset& data, QuantileLevel tau, const PriorSpec& prior,
                 const SamplerConfig& cfg, const CoefVector& start);

/// As above, computing the start by qr_fit.
Chain run_chains(const Dataset& data, QuantileLevel tau, const PriorSpec& prior,
                 const SamplerConfig& cfg);

struct Diagnostics {
  Vector ess;
  Vector split_rhat;
  double min_ess = 0.0;
  double max_rhat = 0.0;
};

/// Split-Rhat and multi-chain effective sample size (Geyer initial monotone
/// sequence on the combined autocorrelation) per coordinate. ESS is capped at
/// the number of draws. Throws ChainError when a split half has fewer than
/// 100 draws or a coordinate has zero variance.
Diagnostics diagnostics(const Matrix& draws, int chains);
Diagnostics diagnostics(const Chain& chain);

/// Writes `chain,iter,beta_0,...,beta_p,log_post` rows.
void write_draws_csv(std::ostream& out, const Chain& chain);

}  // namespace bqr
