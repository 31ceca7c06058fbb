#pragma once

// Reference computations used as independent checks. None of these call the
// library's numerical routines; they only rely on the Dataset container.

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "bqr/core_model.hpp"

namespace oracle {

using bqr::Matrix;
using bqr::Vector;

/// Check loss summed in long double by a plain loop.
long double objective(const bqr::Dataset& data, double tau, const Vector& beta);

/// Exact minimum of the (weighted) check loss: the minimum of a piecewise
/// linear convex function with a full-rank design is attained at a point
/// interpolating cols() observations, so every such subset is tried.
double elemental_minimum(const bqr::Dataset& data, double tau, Vector* argmin = nullptr);

/// Exhaustive grid search over [lo, hi]^cols at the given step. For three or
/// more coefficients the grid is refined around the coarse winner, since a
/// full 1e-3 lattice in 3-D is out of reach.
double grid_minimum(const bqr::Dataset& data, double tau, double lo, double hi, double step);

struct Moments {
  Vector mean;
  Matrix cov;
};

/// Moments of exp(log_density) on a uniform tensor grid (1-D or 2-D).
Moments grid_moments_1d(const std::function<double(double)>& log_density, double lo, double hi, double step);
Moments grid_moments_2d(const std::function<double(double, double)>& log_density, double lo0, double hi0,
                        double lo1, double hi1, int points);

/// Brute-force (1/n) sum_i w_i x_i x_i' by explicit loops.
Matrix loop_d_hat(const Matrix& x, const Vector* weights_squared = nullptr);

/// Extended precision n tau (1 - tau) S D S.
Matrix long_double_sandwich(const Matrix& s, const Matrix& d, long n, double tau);

/// Random symmetric positive semidefinite matrix of the given size and rank.
Matrix random_psd(std::mt19937_64& rng, int size, int rank);

/// Small random regression problem with integer-valued data.
bqr::Dataset random_integer_problem(std::mt19937_64& rng, int n, int p, bool weighted);

/// Continuous random regression problem.
bqr::Dataset random_problem(std::mt19937_64& rng, int n, int p, bool weighted);

}  // namespace oracle
