#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace oracle {

long double objective(const bqr::Dataset& data, double tau, const Vector& beta) {
  long double total = 0.0L;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    long double fit = 0.0L;
    for (Eigen::Index j = 0; j < data.cols(); ++j) fit += static_cast<long double>(data.x()(i, j)) * beta(j);
    const long double r = static_cast<long double>(data.y()(i)) - fit;
    const long double loss = r >= 0 ? tau * r : (tau - 1.0L) * r;
    total += static_cast<long double>(data.weight(i)) * loss;
  }
  return total;
}

namespace {

// Calls visit(subset) for every k-subset of {0..n-1}.
void for_each_subset(int n, int k, const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), 0);
  if (k > n) return;
  while (true) {
    visit(idx);
    int pos = k - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - k + pos) --pos;
    if (pos < 0) return;
    ++idx[static_cast<std::size_t>(pos)];
    for (int q = pos + 1; q < k; ++q) idx[static_cast<std::size_t>(q)] = idx[static_cast<std::size_t>(q - 1)] + 1;
  }
}

}  // namespace

double elemental_minimum(const bqr::Dataset& data, double tau, Vector* argmin) {
  const int n = static_cast<int>(data.n());
  const int k = static_cast<int>(data.cols());
  long double best = std::numeric_limits<long double>::infinity();
  Vector best_beta = Vector::Zero(k);
  for_each_subset(n, k, [&](const std::vector<int>& rows) {
    Matrix a(k, k);
    Vector b(k);
    for (int r = 0; r < k; ++r) {
      a.row(r) = data.x().row(rows[static_cast<std::size_t>(r)]);
      b(r) = data.y()(rows[static_cast<std::size_t>(r)]);
    }
    Eigen::FullPivLU<Matrix> lu(a);
    if (!lu.isInvertible()) return;
    const Vector beta = lu.solve(b);
    const long double value = objective(data, tau, beta);
    if (value < best) {
      best = value;
      best_beta = beta;
    }
  });
  if (argmin) *argmin = best_beta;
  return static_cast<double>(best);
}

namespace {

double grid_search_box(const bqr::Dataset& data, double tau, const Vector& lo, const Vector& hi, double step,
                       Vector& best_beta) {
  const int k = static_cast<int>(data.cols());
  std::vector<long> counts(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) counts[static_cast<std::size_t>(j)] = std::lround((hi(j) - lo(j)) / step) + 1;

  // Residuals are updated incrementally along the last axis.
  const Matrix& x = data.x();
  const Vector& y = data.y();
  double best = std::numeric_limits<double>::infinity();
  std::vector<long> idx(static_cast<std::size_t>(k), 0);
  Vector beta = lo;
  Vector r(data.n());
  while (true) {
    for (int j = 0; j < k - 1; ++j) beta(j) = lo(j) + static_cast<double>(idx[static_cast<std::size_t>(j)]) * step;
    beta(k - 1) = lo(k - 1);
    r = y - x * beta;
    for (long t = 0; t < counts[static_cast<std::size_t>(k - 1)]; ++t) {
      double total = 0.0;
      for (Eigen::Index i = 0; i < data.n(); ++i) {
        const double v = r(i) - static_cast<double>(t) * step * x(i, k - 1);
        total += data.weight(i) * (v >= 0 ? tau * v : (tau - 1.0) * v);
      }
      if (total < best) {
        best = total;
        best_beta = beta;
        best_beta(k - 1) = lo(k - 1) + static_cast<double>(t) * step;
      }
    }
    int pos = k - 2;
    while (pos >= 0) {
      if (++idx[static_cast<std::size_t>(pos)] < counts[static_cast<std::size_t>(pos)]) break;
      idx[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return best;
}

}  // namespace

double grid_minimum(const bqr::Dataset& data, double tau, double lo, double hi, double step) {
  const int k = static_cast<int>(data.cols());
  Vector best_beta(k);
  if (k <= 2) {
    return grid_search_box(data, tau, Vector::Constant(k, lo), Vector::Constant(k, hi), step, best_beta);
  }
  double h = 0.05;
  double best = grid_search_box(data, tau, Vector::Constant(k, lo), Vector::Constant(k, hi), h, best_beta);
  while (h > step * 1.0001) {
    const double next = std::max(step, h / 10.0);
    const Vector center = best_beta;
    const Vector a = (center.array() - 2.0 * h).max(lo).matrix();
    const Vector b = (center.array() + 2.0 * h).min(hi).matrix();
    best = std::min(best, grid_search_box(data, tau, a, b, next, best_beta));
    h = next;
  }
  return best;
}

Moments grid_moments_1d(const std::function<double(double)>& log_density, double lo, double hi, double step) {
  const long count = std::lround((hi - lo) / step) + 1;
  std::vector<double> lp(static_cast<std::size_t>(count));
  double peak = -std::numeric_limits<double>::infinity();
  for (long k = 0; k < count; ++k) {
    lp[static_cast<std::size_t>(k)] = log_density(lo + static_cast<double>(k) * step);
    peak = std::max(peak, lp[static_cast<std::size_t>(k)]);
  }
  long double z = 0, m1 = 0, m2 = 0;
  for (long k = 0; k < count; ++k) {
    const long double u = lo + static_cast<double>(k) * step;
    const long double w = std::exp(static_cast<long double>(lp[static_cast<std::size_t>(k)] - peak));
    z += w;
    m1 += w * u;
    m2 += w * u * u;
  }
  Moments m;
  m.mean = Vector::Constant(1, static_cast<double>(m1 / z));
  m.cov = Matrix::Constant(1, 1, static_cast<double>(m2 / z - (m1 / z) * (m1 / z)));
  return m;
}

Moments grid_moments_2d(const std::function<double(double, double)>& log_density, double lo0, double hi0,
                        double lo1, double hi1, int points) {
  const double h0 = (hi0 - lo0) / (points - 1), h1 = (hi1 - lo1) / (points - 1);
  std::vector<double> lp(static_cast<std::size_t>(points) * points);
  double peak = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < points; ++a) {
    for (int b = 0; b < points; ++b) {
      const double v = log_density(lo0 + a * h0, lo1 + b * h1);
      lp[static_cast<std::size_t>(a) * points + b] = v;
      peak = std::max(peak, v);
    }
  }
  long double z = 0, s0 = 0, s1 = 0, s00 = 0, s01 = 0, s11 = 0;
  for (int a = 0; a < points; ++a) {
    for (int b = 0; b < points; ++b) {
      const long double u = lo0 + a * h0, v = lo1 + b * h1;
      const long double w = std::exp(static_cast<long double>(lp[static_cast<std::size_t>(a) * points + b] - peak));
      z += w;
      s0 += w * u;
      s1 += w * v;
      s00 += w * u * u;
      s01 += w * u * v;
      s11 += w * v * v;
    }
  }
  const long double m0 = s0 / z, m1 = s1 / z;
  Moments m;
  m.mean = Vector(2);
  m.mean << static_cast<double>(m0), static_cast<double>(m1);
  m.cov = Matrix(2, 2);
  m.cov << static_cast<double>(s00 / z - m0 * m0), static_cast<double>(s01 / z - m0 * m1),
      static_cast<double>(s01 / z - m0 * m1), static_cast<double>(s11 / z - m1 * m1);
  return m;
}

Matrix loop_d_hat(const Matrix& x, const Vector* weights_squared) {
  const auto n = x.rows(), k = x.cols();
  Matrix d = Matrix::Zero(k, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = weights_squared ? (*weights_squared)(i) : 1.0;
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = 0; b < k; ++b) d(a, b) += w * x(i, a) * x(i, b);
    }
  }
  return d / static_cast<double>(n);
}

Matrix long_double_sandwich(const Matrix& s, const Matrix& d, long n, double tau) {
  const auto k = s.rows();
  using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const LMatrix sl = s.cast<long double>(), dl = d.cast<long double>();
  LMatrix out = static_cast<long double>(n) * tau * (1.0L - tau) * (sl * dl * sl);
  out = (0.5L * (out + out.transpose())).eval();
  Matrix r(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) r(a, b) = static_cast<double>(out(a, b));
  }
  return r;
}

Matrix random_psd(std::mt19937_64& rng, int size, int rank) {
  std::normal_distribution<double> z;
  Matrix a(size, rank);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < rank; ++j) a(i, j) = z(rng);
  }
  return a * a.transpose();
}

bqr::Dataset random_integer_problem(std::mt19937_64& rng, int n, int p, bool weighted) {
  std::uniform_int_distribution<int> cov(-3, 3), resp(-6, 6), wt(1, 4);
  while (true) {
    Matrix x(n, p);
    Vector y(n), z(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) x(i, j) = cov(rng);
      y(i) = resp(rng);
      z(i) = wt(rng);
    }
    Matrix full(n, p + 1);
    full.col(0).setOnes();
    full.rightCols(p) = x;
    if (Eigen::FullPivLU<Matrix>(full).rank() < p + 1) continue;
    return bqr::Dataset::from_covariates(x, y, weighted ? std::optional<Vector>(z) : std::nullopt);
  }
}

bqr::Dataset random_problem(std::mt19937_64& rng, int n, int p, bool weighted) {
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.2, 3.0);
  std::student_t_distribution<double> t(3.0);
  Matrix x(n, p);
  Vector y(n), w(n);
  for (int i = 0; i < n; ++i) {
    double fit = 0.5;
    for (int j = 0; j < p; ++j) {
      x(i, j) = z(rng);
      fit += (j % 2 == 0 ? 1.0 : -0.5) * x(i, j);
    }
    y(i) = fit + t(rng);
    w(i) = u(rng);
  }
  return bqr::Dataset::from_covariates(x, y, weighted ? std::optional<Vector>(w) : std::nullopt);
}

}  // namespace oracle
