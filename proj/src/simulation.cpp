#include "bqr/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

#include "bqr/parallel.hpp"

namespace bqr {

namespace {

constexpr double kPhiZero = 0.39894228040143267794;  // 1 / sqrt(2 pi)

// Sub-stream tags for the different random consumers of one replication.
constexpr std::uint64_t kBayesStream = 1;
constexpr std::uint64_t kOracleStream = 2;
constexpr std::uint64_t kFullStream = 3;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t rep, std::uint64_t tag) {
  return splitmix64(splitmix64(seed) ^ splitmix64(rep * 0x9e3779b97f4a7c15ULL + tag));
}

// Gaussian law of X_k given the active covariates: mean = coef' x_A, sd.
struct ConditionalLaw {
  std::vector<int> given;  // design-column indices of the conditioning covariates
  Vector coef;
  double sd = 0.0;
  bool degenerate = false;  // X_k itself is active
};

ConditionalLaw conditional_law(const DgpConfig& cfg) {
  ConditionalLaw law;
  const int k = cfg.scale_covariate;
  for (int j : cfg.active_set()) {
    if (j == 0) continue;
    if (j == k) law.degenerate = true;
    law.given.push_back(j);
  }
  if (law.degenerate) return law;
  const Matrix sigma = cfg.covariance();
  const auto m = static_cast<Eigen::Index>(law.given.size());
  if (m == 0) {
    law.coef.resize(0);
    law.sd = std::sqrt(sigma(k - 1, k - 1));
    return law;
  }
  Matrix s_aa(m, m);
  Vector s_ak(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) s_aa(a, b) = sigma(law.given[a] - 1, law.given[b] - 1);
    s_ak(a) = sigma(law.given[a] - 1, k - 1);
  }
  law.coef = s_aa.ldlt().solve(s_ak);
  law.sd = std::sqrt(std::max(sigma(k - 1, k - 1) - s_ak.dot(law.coef), 0.0));
  return law;
}

double conditional_density(const DgpConfig& cfg, const ConditionalLaw& law, const Vector& covariates,
                           const GaussHermite& rule) {
  if (law.degenerate) return dgp_density_at_zero(cfg, covariates);
  double mean = 0.0;
  for (std::size_t a = 0; a < law.given.size(); ++a) {
    mean += law.coef(static_cast<Eigen::Index>(a)) * covariates(law.given[a] - 1);
  }
  if (law.sd == 0.0) return kPhiZero / cfg.scale(mean);
  return rule.expectation([&](double v) { return kPhiZero / cfg.scale(v); }, mean, law.sd);
}

}  // namespace

double default_error_scale(double x) { return (1.0 + (x - 1.0) * (x - 1.0)) / 3.0; }

Matrix DgpConfig::covariance() const {
  const Eigen::Index d = p();
  Matrix sigma(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) sigma(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
  }
  return sigma;
}

std::vector<int> DgpConfig::active_set() const {
  std::vector<int> s{0};
  for (Eigen::Index j = 1; j < coef.size(); ++j) {
    if (coef(j) != 0.0) s.push_back(static_cast<int>(j));
  }
  return s;
}

std::vector<int> DgpConfig::inactive_set() const {
  std::vector<int> s;
  for (Eigen::Index j = 1; j < coef.size(); ++j) {
    if (coef(j) == 0.0) s.push_back(static_cast<int>(j));
  }
  return s;
}

void DgpConfig::validate() const {
  if (n < 1) throw DataError("simulation sample size must be positive");
  if (coef.size() < 2) throw DataError("simulation design needs at least one covariate");
  if (!(std::abs(rho) < 1.0)) throw DataError("AR correlation must lie in (-1, 1)");
  if (scale_covariate < 1 || scale_covariate > p()) throw DataError("scale covariate index out of range");
  if (!scale) throw DataError("error scale function is not set");
}

double dgp_response(const DgpConfig& cfg, const Vector& covariates, double e) {
  if (covariates.size() != cfg.p()) throw DimensionError("covariate row length does not match the design");
  return cfg.coef(0) + covariates.dot(cfg.coef.tail(cfg.p())) + cfg.scale(covariates(cfg.scale_covariate - 1)) * e;
}

double dgp_density_at_zero(const DgpConfig& cfg, const Vector& covariates) {
  return kPhiZero / cfg.scale(covariates(cfg.scale_covariate - 1));
}

DgpSample dgp_generate(const DgpConfig& cfg, std::uint64_t stream) {
  cfg.validate();
  const Eigen::Index n = cfg.n;
  const Eigen::Index p = cfg.p();
  const Matrix chol = cfg.covariance().llt().matrixL();
  Engine engine = make_engine(cfg.seed, stream);
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix covariates(n, p);
  Vector y(n), zeta(n), z(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) z(j) = normal(engine);
    const Vector row = chol * z;
    const double e = normal(engine);
    covariates.row(i) = row.transpose();
    y(i) = dgp_response(cfg, row, e);
    zeta(i) = dgp_density_at_zero(cfg, row);
  }
  std::vector<std::string> names;
  for (Eigen::Index j = 1; j <= p; ++j) names.push_back("x" + std::to_string(j));
  return {Dataset::from_covariates(covariates, std::move(y), std::nullopt, std::move(names)), cfg.coef, zeta};
}

GaussHermite::GaussHermite(int order) {
  if (order < 1) throw DataError("Gauss-Hermite order must be positive");
  // Jacobi matrix of the Hermite recurrence: zero diagonal, off-diagonal sqrt(k / 2).
  Vector diag = Vector::Zero(order);
  Vector off(std::max(order - 1, 0));
  for (int k = 1; k < order; ++k) off(k - 1) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<Matrix> eig;
  eig.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
  nodes = eig.eigenvalues();
  weights = 1.7724538509055160273 * eig.eigenvectors().row(0).transpose().array().square();
}

double dgp_density_at_zero_given_active(const DgpConfig& cfg, const Vector& covariates, const GaussHermite& rule) {
  return conditional_density(cfg, conditional_law(cfg), covariates, rule);
}

Matrix EfficiencyEstimates::oracle_covariance(double tau) const {
  const Matrix g_inv = g_s.inverse();
  const Matrix out = tau * (1.0 - tau) * g_inv * d_s * g_inv;
  return 0.5 * (out + out.transpose());
}

EfficiencyEstimates estimate_population_matrices(const DgpConfig& cfg, std::size_t draws, std::uint64_t seed) {
  cfg.validate();
  if (draws < 100000) throw DataError("population matrices need at least 1e5 covariate draws");
  const GaussHermite rule(64);
  const ConditionalLaw law = conditional_law(cfg);
  const Eigen::Index p = cfg.p();
  const Matrix chol = cfg.covariance().llt().matrixL();

  EfficiencyEstimates est;
  est.active = cfg.active_set();
  est.draws = draws;
  const auto s = static_cast<Eigen::Index>(est.active.size());
  est.d_s = est.g_s = est.q_s = est.v_s = Matrix::Zero(s, s);

  Engine engine = make_engine(seed, 0xEFF1C1E7ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(p), xs(s);
  for (std::size_t t = 0; t < draws; ++t) {
    for (Eigen::Index j = 0; j < p; ++j) z(j) = normal(engine);
    const Vector x = chol * z;
    for (Eigen::Index a = 0; a < s; ++a) xs(a) = est.active[a] == 0 ? 1.0 : x(est.active[a] - 1);
    const double f_full = dgp_density_at_zero(cfg, x);
    const double f_active = conditional_density(cfg, law, x, rule);
    const Matrix outer = xs * xs.transpose();
    est.d_s += outer;
    est.g_s += f_active * outer;
    est.q_s += (f_full * f_full) * outer;
    est.v_s += (f_active * f_active) * outer;
  }
  const double inv = 1.0 / static_cast<double>(draws);
  est.d_s *= inv;
  est.g_s *= inv;
  est.q_s *= inv;
  est.v_s *= inv;
  return est;
}

const CoefficientStats& MethodReport::at(const std::string& label) const {
  for (const auto& s : stats) {
    if (s.label == label) return s;
  }
  throw std::out_of_range("no statistics for " + label + " in " + method);
}

MethodReport aggregate_intervals(const std::string& method, const std::vector<std::vector<Interval>>& per_rep,
                                 const CoefVector& truth, const std::vector<int>& inactive) {
  if (per_rep.empty()) throw DataError("no replications to aggregate");
  const auto reps = static_cast<double>(per_rep.size());
  const Eigen::Index d = truth.size();
  MethodReport report;
  report.method = method;

  auto summarize = [&](const std::string& label, const std::vector<double>& hits, const std::vector<double>& lengths,
                       bool binomial) {
    CoefficientStats st;
    st.label = label;
    double hit_mean = 0.0, len_mean = 0.0;
    for (std::size_t r = 0; r < hits.size(); ++r) {
      hit_mean += hits[r];
      len_mean += lengths[r];
    }
    hit_mean /= reps;
    len_mean /= reps;
    double hit_ss = 0.0, len_ss = 0.0;
    for (std::size_t r = 0; r < hits.size(); ++r) {
      hit_ss += (hits[r] - hit_mean) * (hits[r] - hit_mean);
      len_ss += (lengths[r] - len_mean) * (lengths[r] - len_mean);
    }
    st.coverage = 100.0 * hit_mean;
    st.length = 100.0 * len_mean;
    if (reps > 1.0) {
      st.coverage_se = binomial ? 100.0 * std::sqrt(hit_mean * (1.0 - hit_mean) / reps)
                                : 100.0 * std::sqrt(hit_ss / (reps - 1.0) / reps);
      st.length_se = 100.0 * std::sqrt(len_ss / (reps - 1.0) / reps);
    }
    report.stats.push_back(st);
  };

  for (Eigen::Index j = 0; j < d; ++j) {
    std::vector<double> hits, lengths;
    for (const auto& intervals : per_rep) {
      const Interval& iv = intervals[static_cast<std::size_t>(j)];
      hits.push_back(iv.contains(truth(j)) ? 1.0 : 0.0);
      lengths.push_back(iv.length());
    }
    summarize("beta_" + std::to_string(j), hits, lengths, true);
  }
  if (!inactive.empty()) {
    std::vector<double> hits, lengths;
    for (const auto& intervals : per_rep) {
      double h = 0.0, l = 0.0;
      for (int j : inactive) {
        const Interval& iv = intervals[static_cast<std::size_t>(j)];
        h += iv.contains(truth(j)) ? 1.0 : 0.0;
        l += iv.length();
      }
      hits.push_back(h / static_cast<double>(inactive.size()));
      lengths.push_back(l / static_cast<double>(inactive.size()));
    }
    summarize("beta_zeros", hits, lengths, false);
  }
  return report;
}

const MethodReport& SimulationReport::method(const std::string& name) const {
  for (const auto& m : methods) {
    if (m.method == name) return m;
  }
  throw std::out_of_range("no method " + name + " in simulation report");
}

SimulationReport run_monte_carlo(const MonteCarloConfig& cfg) {
  if (cfg.reps < 1) throw DataError("Monte Carlo needs at least one replication");
  cfg.dgp.validate();
  cfg.sampler.validate();
  const auto start = std::chrono::steady_clock::now();
  const QuantileLevel tau(cfg.tau);
  const int threads = cfg.threads > 0 ? cfg.threads : thread_count();
  const auto reps = static_cast<std::size_t>(cfg.reps);
  const std::vector<int> active = cfg.dgp.active_set();
  const std::vector<int> inactive = cfg.dgp.inactive_set();

  std::vector<ReplicationRecord> records(reps);
  std::vector<std::vector<Interval>> oracle(reps), full(reps);

  parallel_for(reps, threads, [&](std::size_t r) {
    const DgpSample sample = dgp_generate(cfg.dgp, r);
    const Dataset data = cfg.weighted ? sample.data.with_weights(sample.true_zeta) : sample.data;
    SamplerConfig sc = cfg.sampler;
    if (threads > 1) sc.parallel_chains = false;

    sc.seed = derive_seed(cfg.dgp.seed, r, kBayesStream);
    const PosteriorSummary summary = fit_and_infer(data, tau, cfg.prior, sc, cfg.alpha);
    ReplicationRecord& rec = records[r];
    rec.beta_hat = summary.beta_hat;
    rec.beta_check = summary.beta_check;
    rec.sigma_adj_diag = summary.sigma_adj.diagonal();
    rec.intervals = summary.intervals;
    rec.min_ess = summary.diagnostics.min_ess;
    rec.max_rhat = summary.diagnostics.max_rhat;
    rec.soft_fail = summary.soft_fail;
    rec.oracle_beta = qr_fit_subset(sample.data, tau, active).beta_hat;

    if (cfg.oracle_baseline) {
      sc.seed = derive_seed(cfg.dgp.seed, r, kOracleStream);
      const PosteriorSummary o =
          fit_and_infer(sample.data.select_columns(active), tau, {PriorFamily::Flat, 0.0}, sc, cfg.alpha);
      // Excluded covariates are reported as the singleton {0}.
      std::vector<Interval> embedded(static_cast<std::size_t>(data.cols()), Interval{0.0, 0.0, 1.0 - cfg.alpha});
      for (std::size_t a = 0; a < active.size(); ++a) embedded[static_cast<std::size_t>(active[a])] = o.intervals[a];
      oracle[r] = std::move(embedded);
    }
    if (cfg.full_baseline) {
      sc.seed = derive_seed(cfg.dgp.seed, r, kFullStream);
      full[r] = fit_and_infer(sample.data, tau, {PriorFamily::Flat, 0.0}, sc, cfg.alpha).intervals;
    }
  });

  SimulationReport report;
  report.n = cfg.dgp.n;
  report.lambda = cfg.prior.lambda;
  report.family = cfg.prior.family;
  report.reps = cfg.reps;
  report.alpha = cfg.alpha;
  report.weighted = cfg.weighted;
  report.degenerate_se = cfg.reps == 1;
  std::vector<std::vector<Interval>> bayes(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    bayes[r] = records[r].intervals;
    report.soft_failures += records[r].soft_fail ? 1 : 0;
  }
  report.methods.push_back(aggregate_intervals("BayesAdj", bayes, cfg.dgp.coef, inactive));
  if (cfg.oracle_baseline) report.methods.push_back(aggregate_intervals("Oracle", oracle, cfg.dgp.coef, inactive));
  if (cfg.full_baseline) report.methods.push_back(aggregate_intervals("Full", full, cfg.dgp.coef, inactive));
  report.records = std::move(records);
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::vector<SimulationReport> lambda_sweep(const MonteCarloConfig& base, const std::vector<double>& lambdas) {
  if (lambdas.empty()) throw DataError("lambda sweep needs at least one lambda");
  std::vector<SimulationReport> out;
  out.reserve(lambdas.size());
  for (double lambda : lambdas) {
    MonteCarloConfig cfg = base;
    cfg.prior.lambda = lambda;
    out.push_back(run_monte_carlo(cfg));
  }
  return out;
}

void write_report_csv(std::ostream& out, const SimulationReport& report, bool header) {
  if (header) out << "method,n,lambda,coefficient,coverage,coverage_se,length_x100,length_se_x100\n";
  out << std::setprecision(17);
  for (const auto& m : report.methods) {
    for (const auto& s : m.stats) {
      out << m.method << ',' << report.n << ',' << report.lambda << ',' << s.label << ',' << s.coverage << ','
          << s.coverage_se << ',' << s.length << ',' << s.length_se << '\n';
    }
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<SimulationReport>& reports) {
  out << "lambda,method,coefficient,coverage,coverage_se,length,length_se\n";
  out << std::setprecision(17);
  for (const auto& report : reports) {
    for (const auto& m : report.methods) {
      for (const auto& s : m.stats) {
        out << report.lambda << ',' << m.method << ',' << s.label << ',' << s.coverage << ',' << s.coverage_se << ','
            << s.length << ',' << s.length_se << '\n';
      }
    }
  }
}

}  // namespace bqr
