#pragma once

#include <span>

#include "bqr/core_model.hpp"

namespace bqr {

struct SolverOptions {
  // Smoothed-IRLS outer iterations used for the warm start.
  int max_iterations = 200;
  // Optimality tolerance, scaled by (1 + |objective|).
  double tolerance = 1e-8;
  // Basis exchanges allowed during vertex polishing; 0 selects 20 * (n + p + 1).
  int max_pivots = 0;
};

struct QrFit {
  CoefVector beta_hat;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  // Largest descent rate found along the edges of the final vertex (0 at an optimum).
  double kkt_residual = 0.0;
};

/// Quantile regression estimate: minimizes sum_i zeta_i rho_tau(y_i - x_i' beta).
///
/// A smoothed check loss is minimized by iteratively reweighted least squares
/// with the smoothing parameter decreased by continuation down to 1e-10. The
/// result then seeds an exact vertex search (simplex-style basis exchange)
/// that terminates on an optimal vertex of the piecewise-linear objective.
/// Intercept-only designs are solved in closed form via weighted_quantile.
///
/// When the minimizer is not unique only the objective value is meaningful.
/// Throws RankDeficientError for a numerically rank-deficient design and
/// DataError when n < p + 1. If the pivot budget runs out the best vertex so
/// far is returned with converged = false.
QrFit qr_fit(const Dataset& data, QuantileLevel tau, const SolverOptions& opts = {});

/// Fit on a column subset (must contain 0); coefficients of dropped columns are 0.
QrFit qr_fit_subset(const Dataset& data, QuantileLevel tau, std::span<const int> keep,
                    const SolverOptions& opts = {});

/// Lower endpoint of the minimizing set of sum_i rho_tau(y_i - u).
double sample_quantile(std::span<const double> y, QuantileLevel tau);

/// Weighted version: lower endpoint of argmin sum_i w_i rho_tau(y_i - u).
double weighted_quantile(std::span<const double> y, std::span<const double> w, QuantileLevel tau);

/// One-sided derivative of L_n at beta along `direction`. Residuals with
/// |r| <= zero_tol are treated as exact zeros.
double directional_derivative(const Dataset& data, QuantileLevel tau, const CoefVector& beta,
                              const Vector& direction, double zero_tol = 1e-9);

/// Throws RankDeficientError naming the first dependent column when X is
/// numerically rank deficient (column-pivoted QR, threshold 1e-10 * |R_00|).
void check_full_rank(const Matrix& x);

}  // namespace bqr
