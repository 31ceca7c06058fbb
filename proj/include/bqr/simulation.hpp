#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "bqr/inference.hpp"

namespace bqr {

/// Default heteroscedastic error scale, (1 + (x - 1)^2) / 3.
double default_error_scale(double x);

/// Linear median-regression design with AR(1)-correlated Gaussian covariates
/// and errors scale(x_k) * e, e ~ N(0, 1):
///   Y = x' coef + scale(X_k) e,  X ~ N(0, Sigma), Sigma_ij = rho^|i-j|.
/// The defaults give Y = 1 + 3 X_2 - 5 X_5 + {(1 + (X_6 - 1)^2) / 3} e.
struct DgpConfig {
  Eigen::Index n = 200;
  std::uint64_t seed = 0;
  double rho = 0.8;
  CoefVector coef = (CoefVector(7) << 1.0, 0.0, 3.0, 0.0, 0.0, -5.0, 0.0).finished();
  int scale_covariate = 6;  // design column driving the error scale
  std::function<double(double)> scale = default_error_scale;

  Eigen::Index p() const { return coef.size() - 1; }
  Matrix covariance() const;
  // {0} plus the indices of nonzero slopes.
  std::vector<int> active_set() const;
  std::vector<int> inactive_set() const;
  void validate() const;
};

struct DgpSample {
  Dataset data;
  CoefVector true_beta;
  Vector true_zeta;  // f_{eps|X = x_i}(0)
};

/// One data set drawn from the engine keyed by (cfg.seed, stream).
DgpSample dgp_generate(const DgpConfig& cfg, std::uint64_t stream = 0);

/// Response for a given covariate row (length p, no intercept) and standardized error.
double dgp_response(const DgpConfig& cfg, const Vector& covariates, double e);

/// f_{eps | X = x}(0) = phi(0) / scale(x_k).
double dgp_density_at_zero(const DgpConfig& cfg, const Vector& covariates);

/// Physicists' Gauss-Hermite rule (weight exp(-t^2)) via Golub-Welsch.
struct GaussHermite {
  Vector nodes;
  Vector weights;
  explicit GaussHermite(int order);
  /// E[g(Z)] for Z ~ N(mean, sd^2).
  template <class F>
  double expectation(F&& g, double mean, double sd) const {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < nodes.size(); ++i) acc += weights(i) * g(mean + 1.4142135623730951 * sd * nodes(i));
    return acc / 1.7724538509055160273;
  }
};

/// f_{eps | X_S = x_S}(0): the conditional density averaged over the
/// Gaussian law of the scale covariate given the active covariates.
/// `covariates` is a full length-p row; only active entries are read.
double dgp_density_at_zero_given_active(const DgpConfig& cfg, const Vector& covariates,
                                        const GaussHermite& rule);

struct EfficiencyEstimates {
  std::vector<int> active;
  Matrix d_s;  // E[X_S X_S']
  Matrix g_s;  // E[X_S X_S' f_{eps|X_S}(0)]
  Matrix q_s;  // E[X_S X_S' f_{eps|X}(0)^2]
  Matrix v_s;  // E[X_S X_S' f_{eps|X_S}(0)^2]
  std::size_t draws = 0;

  /// tau (1 - tau) G_S^{-1} D_S G_S^{-1}.
  Matrix oracle_covariance(double tau) const;
};

/// Monte Carlo estimates over `draws` covariate vectors (>= 1e5), with a
/// 64-node Gauss-Hermite rule for f_{eps|X_S}(0).
EfficiencyEstimates estimate_population_matrices(const DgpConfig& cfg, std::size_t draws,
                                                 std::uint64_t seed = 0);

struct CoefficientStats {
  std::string label;  // beta_j or beta_zeros
  double coverage = 0.0;     // percent
  double coverage_se = 0.0;  // percent
  double length = 0.0;       // average length x 100
  double length_se = 0.0;    // x 100
};

struct MethodReport {
  std::string method;
  std::vector<CoefficientStats> stats;  // beta_0..beta_p then beta_zeros
  const CoefficientStats& at(const std::string& label) const;
};

/// Coverage/length aggregation over replications. `inactive` indexes the
/// coefficients pooled into beta_zeros (skipped when empty).
MethodReport aggregate_intervals(const std::string& method,
                                 const std::vector<std::vector<Interval>>& per_rep,
                                 const CoefVector& truth, const std::vector<int>& inactive);

struct MonteCarloConfig {
  DgpConfig dgp;
  PriorChoice prior{PriorFamily::ClippedAbsolute, 0.066};
  double alpha = 0.10;
  double tau = 0.5;
  int reps = 200;
  bool weighted = false;  // use the true zeta_i as observation weights
  SamplerConfig sampler;
  bool oracle_baseline = false;  // flat-prior posterior on the true active columns
  bool full_baseline = false;    // flat-prior posterior on all columns
  int threads = 0;               // 0: thread_count()
};

struct ReplicationRecord {
  CoefVector beta_hat;
  CoefVector beta_check;
  CoefVector oracle_beta;  // qr_fit_subset on the true active set
  Vector sigma_adj_diag;
  std::vector<Interval> intervals;
  double min_ess = 0.0;
  double max_rhat = 0.0;
  bool soft_fail = false;
};

struct SimulationReport {
  Eigen::Index n = 0;
  double lambda = 0.0;
  PriorFamily family = PriorFamily::ClippedAbsolute;
  int reps = 0;
  double alpha = 0.1;
  bool weighted = false;
  int soft_failures = 0;
  bool degenerate_se = false;  // reps == 1
  double runtime_seconds = 0.0;
  std::vector<MethodReport> methods;  // "BayesAdj" first
  std::vector<ReplicationRecord> records;

  const MethodReport& method(const std::string& name) const;
};

/// Replication r draws its data from stream r of dgp.seed and its chains
/// from a seed derived from (dgp.seed, r); results do not depend on thread count.
SimulationReport run_monte_carlo(const MonteCarloConfig& cfg);

std::vector<SimulationReport> lambda_sweep(const MonteCarloConfig& base, const std::vector<double>& lambdas);

/// method,n,lambda,coefficient,coverage,coverage_se,length_x100,length_se_x100
void write_report_csv(std::ostream& out, const SimulationReport& report, bool header = true);
/// lambda,coefficient,coverage,length (plus SE columns)
void write_sweep_csv(std::ostream& out, const std::vector<SimulationReport>& reports);

}  // namespace bqr
