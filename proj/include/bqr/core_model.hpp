#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bqr/errors.hpp"

namespace bqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
// Coefficient vector, index 0 is the intercept.
using CoefVector = Eigen::VectorXd;

/// Quantile level tau, validated to lie strictly inside (0, 1).
class QuantileLevel {
 public:
  explicit QuantileLevel(double tau);
  double value() const noexcept { return tau_; }
  operator double() const noexcept { return tau_; }

 private:
  double tau_;
};

/// Regression data: design with a leading all-ones intercept column, the
/// response and optional positive observation weights (zeta).
///
/// Immutable once constructed; the constructor enforces every invariant
/// (finite entries, intercept column of ones, positive weights).
class Dataset {
 public:
  Dataset(Matrix x, Vector y, std::optional<Vector> zeta = std::nullopt,
          std::vector<std::string> names = {});

  /// Builds a dataset from covariates only, prepending the intercept column.
  static Dataset from_covariates(const Matrix& covariates, Vector y,
                                 std::optional<Vector> zeta = std::nullopt,
                                 std::vector<std::string> names = {});

  const Matrix& x() const noexcept { return x_; }
  const Vector& y() const noexcept { return y_; }
  const std::optional<Vector>& zeta() const noexcept { return zeta_; }
  bool weighted() const noexcept { return zeta_.has_value(); }
  // zeta_i, or 1 when unweighted.
  double weight(Eigen::Index i) const { return zeta_ ? (*zeta_)(i) : 1.0; }

  Eigen::Index n() const noexcept { return x_.rows(); }
  // Number of covariates, excluding the intercept.
  Eigen::Index p() const noexcept { return x_.cols() - 1; }
  Eigen::Index cols() const noexcept { return x_.cols(); }

  /// Column names, one per design column; names()[0] is "intercept".
  const std::vector<std::string>& names() const noexcept { return names_; }

  /// Dataset restricted to the given design columns (must contain 0).
  Dataset select_columns(std::span<const int> keep) const;
  Dataset with_weights(std::optional<Vector> zeta) const;

 private:
  Matrix x_;
  Vector y_;
  std::optional<Vector> zeta_;
  std::vector<std::string> names_;
};

/// rho_tau(v) = v * (tau - 1{v < 0}).
inline double check_loss(double v, double tau) noexcept {
  return v < 0.0 ? v * (tau - 1.0) : v * tau;
}

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// L_n(beta) = sum_i zeta_i rho_tau(y_i - x_i' beta).
double neg_working_loglik(const Dataset& data, QuantileLevel tau, const CoefVector& beta);

/// Same objective from a precomputed residual vector r = y - X beta.
double weighted_check_sum(std::span<const double> residuals, const std::optional<Vector>& zeta,
                          double tau);

}  // namespace bqr
