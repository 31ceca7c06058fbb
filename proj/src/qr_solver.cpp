#include "bqr/qr_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <vector>

namespace bqr {

namespace {

double psi(double r, double tau) { return r < 0.0 ? tau - 1.0 : tau; }

// A vertex of the piecewise-linear objective: p+1 observations interpolated exactly.
struct Basis {
  std::vector<int> rows;
  CoefVector beta;
  Matrix inverse;  // (X_h)^{-1}; column k moves off observation rows[k]
};

bool solve_basis(const Matrix& x, const Vector& y, Basis& basis) {
  const auto k = static_cast<Eigen::Index>(basis.rows.size());
  Matrix xb(k, k);
  Vector yb(k);
  for (Eigen::Index m = 0; m < k; ++m) {
    xb.row(m) = x.row(basis.rows[static_cast<std::size_t>(m)]);
    yb(m) = y(basis.rows[static_cast<std::size_t>(m)]);
  }
  Eigen::PartialPivLU<Matrix> lu(xb);
  if (!(lu.rcond() > 1e-13)) return false;
  basis.beta = lu.solve(yb);
  basis.inverse = lu.inverse();
  return basis.beta.allFinite();
}

// Picks p+1 linearly independent rows, preferring the smallest |residual|.
std::vector<int> initial_basis(const Matrix& x, const Vector& r) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = x.cols();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return std::abs(r(a)) < std::abs(r(b)); });
  std::vector<int> chosen;
  Matrix q(k, 0);
  for (int i : order) {
    Vector v = x.row(i).transpose();
    const double norm = v.norm();
    if (norm == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) v -= q * (q.transpose() * v);
    if (v.norm() > 1e-8 * norm) {
      q.conservativeResize(Eigen::NoChange, q.cols() + 1);
      q.col(q.cols() - 1) = v / v.norm();
      chosen.push_back(i);
      if (static_cast<Eigen::Index>(chosen.size()) == k) break;
    }
  }
  return chosen;
}

struct EdgeScan {
  double best_rate = std::numeric_limits<double>::infinity();
  int best_col = -1;
  double best_sign = 1.0;
};

// Directional derivatives along the 2(p+1) edges leaving the vertex.
EdgeScan scan_edges(const Dataset& data, double tau, const Basis& basis, const Vector& r,
                    const std::vector<char>& is_zero, Matrix& a) {
  a.noalias() = data.x() * basis.inverse;
  EdgeScan scan;
  const Eigen::Index n = data.n();
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    double linear = 0.0, zero_plus = 0.0, zero_minus = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = data.weight(i);
      const double aik = a(i, k);
      if (is_zero[static_cast<std::size_t>(i)]) {
        zero_plus += w * check_loss(-aik, tau);
        zero_minus += w * check_loss(aik, tau);
      } else {
        linear -= w * psi(r(i), tau) * aik;
      }
    }
    const double plus = linear + zero_plus;
    const double minus = -linear + zero_minus;
    if (plus < scan.best_rate) scan = {plus, static_cast<int>(k), 1.0};
    if (minus < scan.best_rate) scan = {minus, static_cast<int>(k), -1.0};
  }
  return scan;
}

std::vector<char> zero_mask(const Basis& basis, const Vector& r, double zero_tol) {
  std::vector<char> mask(static_cast<std::size_t>(r.size()), 0);
  for (Eigen::Index i = 0; i < r.size(); ++i) mask[static_cast<std::size_t>(i)] = std::abs(r(i)) <= zero_tol;
  for (int i : basis.rows) mask[static_cast<std::size_t>(i)] = 1;
  return mask;
}

CoefVector irls_warm_start(const Dataset& data, double tau, int max_iterations, int& iterations) {
  const Matrix& x = data.x();
  const Vector& y = data.y();
  const Eigen::Index n = data.n();
  Vector zeta = data.zeta() ? *data.zeta() : Vector::Ones(n);

  Vector sw = zeta.cwiseSqrt();
  CoefVector beta = (sw.asDiagonal() * x).colPivHouseholderQr().solve(sw.cwiseProduct(y));
  Vector r = y - x * beta;
  double eps = std::max(r.cwiseAbs().mean(), 1e-8);
  const Vector tilt = (2.0 * tau - 1.0) * (x.transpose() * zeta);

  for (iterations = 0; iterations < max_iterations; ++iterations) {
    Vector w(n);
    for (Eigen::Index i = 0; i < n; ++i) w(i) = zeta(i) / std::sqrt(r(i) * r(i) + eps * eps);
    const Matrix xtwx = x.transpose() * w.asDiagonal() * x;
    const Vector rhs = x.transpose() * w.cwiseProduct(y) + tilt;
    Eigen::LDLT<Matrix> ldlt(xtwx);
    if (ldlt.info() != Eigen::Success) break;
    CoefVector next = ldlt.solve(rhs);
    if (!next.allFinite()) break;
    const double change = (next - beta).norm();
    beta = next;
    r = y - x * beta;
    if (eps <= 1e-10 && change <= 1e-12 * (1.0 + beta.norm())) {
      ++iterations;
      break;
    }
    eps = std::max(eps * 0.2, 1e-10);
  }
  return beta;
}

QrFit location_fit(const Dataset& data, QuantileLevel tau) {
  std::vector<double> w(static_cast<std::size_t>(data.n()));
  for (Eigen::Index i = 0; i < data.n(); ++i) w[static_cast<std::size_t>(i)] = data.weight(i);
  const Vector& y = data.y();
  QrFit fit;
  fit.beta_hat = CoefVector::Constant(1, weighted_quantile({y.data(), w.size()}, w, tau));
  fit.objective = neg_working_loglik(data, tau, fit.beta_hat);
  fit.converged = true;
  return fit;
}

}  // namespace

void check_full_rank(const Matrix& x) {
  Eigen::ColPivHouseholderQR<Matrix> qr(x);
  const Matrix& packed = qr.matrixQR();
  const Eigen::Index k = std::min(packed.rows(), packed.cols());
  const double lead = k > 0 ? std::abs(packed(0, 0)) : 0.0;
  const double threshold = 1e-10 * lead;
  Eigen::Index rank = 0;
  while (rank < k && std::abs(packed(rank, rank)) > threshold) ++rank;
  if (rank < x.cols()) {
    const int col = qr.colsPermutation().indices()(rank);
    throw RankDeficientError("design matrix is rank deficient: column " + std::to_string(col) +
                                 " is linearly dependent on the others",
                             col);
  }
}

double sample_quantile(std::span<const double> y, QuantileLevel tau) {
  const std::vector<double> w(y.size(), 1.0);
  return weighted_quantile(y, w, tau);
}

double weighted_quantile(std::span<const double> y, std::span<const double> w, QuantileLevel tau) {
  if (y.empty()) throw DataError("quantile of an empty vector");
  if (w.size() != y.size()) throw DimensionError("weights and values differ in length");
  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  const double target = tau.value() * total;
  // Right derivative at u is W(y <= u) - tau * W; the lower endpoint is the
  // first order statistic where it turns nonnegative.
  double cumulative = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    cumulative += w[order[k]];
    const bool tied_next = k + 1 < order.size() && y[order[k + 1]] == y[order[k]];
    if (!tied_next && cumulative >= target) return y[order[k]];
  }
  return y[order.back()];
}

double directional_derivative(const Dataset& data, QuantileLevel tau, const CoefVector& beta,
                              const Vector& direction, double zero_tol) {
  if (beta.size() != data.cols() || direction.size() != data.cols()) {
    throw DimensionError("direction/coefficients do not match design columns");
  }
  const Vector r = data.y() - data.x() * beta;
  const Vector a = data.x() * direction;
  const double tol = zero_tol * (1.0 + data.y().cwiseAbs().maxCoeff());
  CompensatedSum acc;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double w = data.weight(i);
    if (std::abs(r(i)) <= tol) {
      acc.add(w * check_loss(-a(i), tau));
    } else {
      acc.add(-w * psi(r(i), tau) * a(i));
    }
  }
  return acc.value();
}

QrFit qr_fit(const Dataset& data, QuantileLevel tau, const SolverOptions& opts) {
  const Eigen::Index n = data.n();
  const Eigen::Index k = data.cols();
  if (n < k) {
    throw DataError("quantile regression needs n >= p + 1 (n = " + std::to_string(n) +
                    ", columns = " + std::to_string(k) + ")");
  }
  check_full_rank(data.x());
  if (k == 1) return location_fit(data, tau);

  const Matrix& x = data.x();
  const Vector& y = data.y();
  int irls_iterations = 0;
  const CoefVector warm = irls_warm_start(data, tau, opts.max_iterations, irls_iterations);

  Basis basis;
  basis.rows = initial_basis(x, y - x * warm);
  if (static_cast<Eigen::Index>(basis.rows.size()) != k || !solve_basis(x, y, basis)) {
    throw RankDeficientError("could not find a nonsingular starting basis", 0);
  }

  const double zero_tol = 1e-12 * (1.0 + y.cwiseAbs().maxCoeff());
  const int max_pivots = opts.max_pivots > 0 ? opts.max_pivots : static_cast<int>(20 * (n + k));
  Matrix a;
  Vector r = y - x * basis.beta;
  QrFit fit;
  fit.converged = false;
  int pivots = 0;
  std::set<std::vector<int>> visited_degenerate;

  while (true) {
    const double objective = neg_working_loglik(data, tau, basis.beta);
    const double tol = opts.tolerance * (1.0 + std::abs(objective));
    std::vector<char> is_zero = zero_mask(basis, r, zero_tol);
    EdgeScan scan = scan_edges(data, tau, basis, r, is_zero, a);

    if (scan.best_rate >= -tol) {
      // Degenerate vertex: other bases through the same point may expose a
      // descent edge that this basis cannot see.
      bool moved = false;
      std::vector<int> key = basis.rows;
      std::sort(key.begin(), key.end());
      if (visited_degenerate.insert(key).second) {
        for (Eigen::Index i = 0; i < n && !moved; ++i) {
          if (!is_zero[static_cast<std::size_t>(i)] ||
              std::find(basis.rows.begin(), basis.rows.end(), static_cast<int>(i)) != basis.rows.end()) {
            continue;
          }
          for (Eigen::Index col = 0; col < k && !moved; ++col) {
            if (std::abs(a(i, col)) < 1e-8) continue;
            Basis alt = basis;
            alt.rows[static_cast<std::size_t>(col)] = static_cast<int>(i);
            if (!solve_basis(x, y, alt)) continue;
            Matrix alt_a;
            const Vector alt_r = y - x * alt.beta;
            const EdgeScan alt_scan = scan_edges(data, tau, alt, alt_r, zero_mask(alt, alt_r, zero_tol), alt_a);
            if (alt_scan.best_rate < -tol) {
              basis = std::move(alt);
              r = alt_r;
              moved = true;
            }
          }
        }
      }
      if (!moved) {
        fit.converged = true;
        fit.kkt_residual = std::max(0.0, -scan.best_rate);
        break;
      }
      continue;
    }
    if (pivots >= max_pivots) {
      fit.kkt_residual = -scan.best_rate;
      break;
    }

    // Exact line search: f(t) = sum w rho(r_i - t a_i) is convex piecewise
    // linear in t; walk the breakpoints until the slope turns nonnegative.
    const Vector dir = scan.best_sign * a.col(scan.best_col);
    std::vector<std::pair<double, int>> breaks;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (is_zero[static_cast<std::size_t>(i)] || dir(i) == 0.0) continue;
      const double t = r(i) / dir(i);
      if (t > 0.0) breaks.emplace_back(t, static_cast<int>(i));
    }
    std::sort(breaks.begin(), breaks.end());
    double slope = scan.best_rate;
    int entering = -1;
    for (const auto& [t, i] : breaks) {
      slope += data.weight(i) * std::abs(dir(i));
      if (slope >= 0.0) {
        entering = i;
        break;
      }
    }
    if (entering < 0) {
      // Objective unbounded below along this edge; cannot happen for tau in (0,1).
      fit.kkt_residual = -scan.best_rate;
      break;
    }
    Basis next = basis;
    next.rows[static_cast<std::size_t>(scan.best_col)] = entering;
    if (!solve_basis(x, y, next)) {
      fit.kkt_residual = -scan.best_rate;
      break;
    }
    basis = std::move(next);
    r = y - x * basis.beta;
    ++pivots;
  }

  fit.beta_hat = basis.beta;
  fit.objective = neg_working_loglik(data, tau, fit.beta_hat);
  fit.iterations = irls_iterations + pivots;
  return fit;
}

QrFit qr_fit_subset(const Dataset& data, QuantileLevel tau, std::span<const int> keep,
                    const SolverOptions& opts) {
  const Dataset sub = data.select_columns(keep);
  QrFit fit = qr_fit(sub, tau, opts);
  CoefVector full = CoefVector::Zero(data.cols());
  for (std::size_t m = 0; m < keep.size(); ++m) full(keep[m]) = fit.beta_hat(static_cast<Eigen::Index>(m));
  fit.beta_hat = std::move(full);
  return fit;
}

}  // namespace bqr
