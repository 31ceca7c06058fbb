#include "bqr/core_model.hpp"

#include <cmath>
#include <sstream>

namespace bqr {

QuantileLevel::QuantileLevel(double tau) : tau_(tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    std::ostringstream msg;
    msg << "quantile level must lie in (0, 1), got " << tau;
    throw DataError(msg.str());
  }
}

Dataset::Dataset(Matrix x, Vector y, std::optional<Vector> zeta, std::vector<std::string> names)
    : x_(std::move(x)), y_(std::move(y)), zeta_(std::move(zeta)), names_(std::move(names)) {
  if (x_.rows() < 1) throw DataError("dataset needs at least one observation");
  if (x_.cols() < 1) throw DataError("design matrix needs an intercept column");
  if (y_.size() != x_.rows()) {
    throw DimensionError("response length " + std::to_string(y_.size()) +
                         " does not match design rows " + std::to_string(x_.rows()));
  }
  if (!x_.allFinite()) throw DataError("design matrix contains non-finite entries");
  if (!y_.allFinite()) throw DataError("response contains non-finite entries");
  for (Eigen::Index i = 0; i < x_.rows(); ++i) {
    if (x_(i, 0) != 1.0) {
      throw DataError("column 0 must be the all-ones intercept (row " + std::to_string(i) + ")");
    }
  }
  if (zeta_) {
    if (zeta_->size() != x_.rows()) throw DimensionError("weight vector length mismatch");
    for (Eigen::Index i = 0; i < zeta_->size(); ++i) {
      const double z = (*zeta_)(i);
      if (!(std::isfinite(z) && z > 0.0)) {
        throw DataError("observation weights must be positive and finite (row " +
                        std::to_string(i) + ")");
      }
    }
  }
  if (names_.empty()) {
    names_.reserve(static_cast<std::size_t>(x_.cols()));
    names_.emplace_back("intercept");
    for (Eigen::Index j = 1; j < x_.cols(); ++j) names_.push_back("x" + std::to_string(j));
  } else if (static_cast<Eigen::Index>(names_.size()) != x_.cols()) {
    throw DimensionError("column name count does not match design columns");
  }
}

Dataset Dataset::from_covariates(const Matrix& covariates, Vector y, std::optional<Vector> zeta,
                                 std::vector<std::string> names) {
  Matrix x(covariates.rows(), covariates.cols() + 1);
  x.col(0).setOnes();
  x.rightCols(covariates.cols()) = covariates;
  if (!names.empty()) names.insert(names.begin(), "intercept");
  return Dataset(std::move(x), std::move(y), std::move(zeta), std::move(names));
}

Dataset Dataset::select_columns(std::span<const int> keep) const {
  if (keep.empty() || keep.front() != 0) {
    throw DataError("column subset must start with the intercept (index 0)");
  }
  Matrix sub(x_.rows(), static_cast<Eigen::Index>(keep.size()));
  std::vector<std::string> sub_names;
  int prev = -1;
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const int j = keep[k];
    if (j <= prev || j >= x_.cols()) throw DataError("column subset must be sorted and in range");
    prev = j;
    sub.col(static_cast<Eigen::Index>(k)) = x_.col(j);
    sub_names.push_back(names_[static_cast<std::size_t>(j)]);
  }
  return Dataset(std::move(sub), y_, zeta_, std::move(sub_names));
}

Dataset Dataset::with_weights(std::optional<Vector> zeta) const {
  return Dataset(x_, y_, std::move(zeta), names_);
}

double weighted_check_sum(std::span<const double> residuals, const std::optional<Vector>& zeta,
                          double tau) {
  CompensatedSum acc;
  if (zeta) {
    const double* z = zeta->data();
    for (std::size_t i = 0; i < residuals.size(); ++i) acc.add(z[i] * check_loss(residuals[i], tau));
  } else {
    for (double r : residuals) acc.add(check_loss(r, tau));
  }
  return acc.value();
}

double neg_working_loglik(const Dataset& data, QuantileLevel tau, const CoefVector& beta) {
  if (beta.size() != data.cols()) {
    throw DimensionError("coefficient length " + std::to_string(beta.size()) +
                         " does not match design columns " + std::to_string(data.cols()));
  }
  const Vector r = data.y() - data.x() * beta;
  return weighted_check_sum(std::span<const double>(r.data(), static_cast<std::size_t>(r.size())),
                            data.zeta(), tau.value());
}

}  // namespace bqr
