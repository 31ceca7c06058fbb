#include "bqr/sampler.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <string>

#include "bqr/parallel.hpp"
#include "bqr/qr_solver.hpp"

namespace bqr {

void SamplerConfig::validate() const {
  if (chains < 1) throw DataError("sampler needs at least one chain");
  if (thinning < 1) throw DataError("thinning must be at least 1");
  if (burnin < 0 || burnin >= iterations) throw DataError("burn-in must be in [0, iterations)");
  if (draws_per_chain() < 1) throw DataError("no draws left after burn-in and thinning");
  if (!(initial_scale > 0.0 && std::isfinite(initial_scale))) throw DataError("initial proposal scale must be positive");
  if (adapt_window < 1) throw DataError("adaptation window must be positive");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) throw DataError("target acceptance must be in (0, 1)");
}

namespace {

struct ChainResult {
  Matrix draws;
  Vector log_post;
  double acceptance = 0.0;
  int updates = 0;
  int last_update = -1;
  Matrix proposal;
};

Matrix cholesky_factor(const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) throw std::runtime_error("proposal covariance is not positive definite");
  return llt.matrixL();
}

ChainResult run_single_chain(int index, const LogDensity& log_density, const Vector& start,
                             const Matrix& initial_covariance, const SamplerConfig& cfg) {
  const Eigen::Index d = start.size();
  Engine engine = make_engine(cfg.seed, static_cast<std::uint64_t>(index));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Vector z(d);
  auto fill_normal = [&] {
    for (Eigen::Index j = 0; j < d; ++j) z(j) = normal(engine);
  };

  Matrix chol = cholesky_factor(initial_covariance);
  fill_normal();
  Vector beta = start + 0.1 * (chol * z);
  double lp = log_density(beta);
  if (!std::isfinite(lp)) {
    beta = start;
    lp = log_density(beta);
    if (!std::isfinite(lp)) throw std::runtime_error("log posterior is not finite at the initial point");
  }

  const int per_chain = cfg.draws_per_chain();
  ChainResult out;
  out.draws.resize(per_chain, d);
  out.log_post.resize(per_chain);
  out.proposal = initial_covariance;

  double log_scale = std::log(2.38 * 2.38 / static_cast<double>(d));
  Vector running_mean = beta;
  Matrix running_m2 = Matrix::Zero(d, d);
  double count = 1.0;
  long accepted = 0;
  int stored = 0;
  Vector proposal(d);

  for (int t = 0; t < cfg.iterations; ++t) {
    fill_normal();
    proposal.noalias() = beta + std::exp(0.5 * log_scale) * (chol * z);
    const double lp_proposal = log_density(proposal);
    const double log_ratio = lp_proposal - lp;
    const bool finite = std::isfinite(lp_proposal);
    const bool accept = finite && std::log(uniform(engine)) < log_ratio;
    if (accept) {
      beta = proposal;
      lp = lp_proposal;
    }

    if (t < cfg.burnin) {
      const double accept_prob = finite ? std::min(1.0, std::exp(log_ratio)) : 0.0;
      const double gain = 1.0 / std::pow(1.0 + t / static_cast<double>(cfg.adapt_window), 0.6);
      log_scale += gain * (accept_prob - cfg.target_acceptance);

      count += 1.0;
      const Vector delta = beta - running_mean;
      running_mean += delta / count;
      running_m2.noalias() += delta * (beta - running_mean).transpose();

      const bool refresh = (t + 1) % cfg.adapt_window == 0 && t + 1 < cfg.burnin &&
                           count > 2.0 * static_cast<double>(d);
      if (refresh) {
        Matrix cov = running_m2 / (count - 1.0);
        cov = (0.5 * (cov + cov.transpose())).eval();
        const double ridge = 1e-10 * std::max(cov.diagonal().mean(), 1e-300);
        cov.diagonal().array() += ridge;
        Eigen::LLT<Matrix> llt(cov);
        if (llt.info() == Eigen::Success) {
          chol = llt.matrixL();
          out.proposal = cov;
          ++out.updates;
          out.last_update = t + 1;
        }
      }
    } else {
      accepted += accept ? 1 : 0;
      if ((t - cfg.burnin + 1) % cfg.thinning == 0 && stored < per_chain) {
        out.draws.row(stored) = beta.transpose();
        out.log_post(stored) = lp;
        ++stored;
      }
    }
  }
  out.acceptance = static_cast<double>(accepted) / static_cast<double>(cfg.iterations - cfg.burnin);
  return out;
}

}  // namespace

Chain sample_log_density(const LogDensity& log_density, const Vector& start,
                         const Matrix& initial_covariance, const SamplerConfig& cfg) {
  cfg.validate();
  if (initial_covariance.rows() != start.size() || initial_covariance.cols() != start.size()) {
    throw DimensionError("initial proposal covariance does not match the start point");
  }
  std::vector<ChainResult> results(static_cast<std::size_t>(cfg.chains));
  parallel_for(results.size(), cfg.parallel_chains ? thread_count() : 1, [&](std::size_t c) {
    results[c] = run_single_chain(static_cast<int>(c), log_density, start, initial_covariance, cfg);
  });

  Chain chain;
  chain.chains = cfg.chains;
  chain.draws_per_chain = cfg.draws_per_chain();
  const Eigen::Index m = static_cast<Eigen::Index>(chain.chains) * chain.draws_per_chain;
  chain.draws.resize(m, start.size());
  chain.log_post.resize(m);
  double accepted = 0.0;
  for (int c = 0; c < cfg.chains; ++c) {
    const auto& r = results[static_cast<std::size_t>(c)];
    const Eigen::Index offset = static_cast<Eigen::Index>(c) * chain.draws_per_chain;
    chain.draws.middleRows(offset, chain.draws_per_chain) = r.draws;
    chain.log_post.segment(offset, chain.draws_per_chain) = r.log_post;
    chain.acceptance.push_back(r.acceptance);
    chain.adaptation_updates.push_back(r.updates);
    chain.last_adaptation_iteration.push_back(r.last_update);
    chain.final_proposal.push_back(r.proposal);
    accepted += r.acceptance;
  }
  chain.acceptance_rate = accepted / cfg.chains;
  chain.acceptance_warning = chain.acceptance_rate < 0.05 || chain.acceptance_rate > 0.95;
  return chain;
}

double log_posterior(const Dataset& data, QuantileLevel tau, const PriorSpec& prior,
                     const CoefVector& beta) {
  if (beta.size() != data.cols()) throw DimensionError("coefficient length does not match design");
  thread_local Vector residual;
  residual.noalias() = data.y() - data.x() * beta;
  const double loss = weighted_check_sum(
      std::span<const double>(residual.data(), static_cast<std::size_t>(residual.size())), data.zeta(),
      tau.value());
  return -loss + log_prior(prior, beta);
}

Chain run_chains(const Dataset& data, QuantileLevel tau, const PriorSpec& prior,
                 const SamplerConfig& cfg, const CoefVector& start) {
  cfg.validate();
  if (prior.p() != data.p()) {
    throw DimensionError("prior has " + std::to_string(prior.p()) + " slopes, data has " +
                         std::to_string(data.p()));
  }
  if (start.size() != data.cols()) throw DimensionError("start point does not match design");

  const double n = static_cast<double>(data.n());
  const Vector zeta = data.zeta() ? *data.zeta() : Vector::Ones(data.n());
  const Matrix xtwx = data.x().transpose() * zeta.asDiagonal() * data.x();
  double spread = neg_working_loglik(data, tau, start) / (n * tau * (1.0 - tau));
  if (!(spread > 0.0)) spread = 1e-6;  // perfect interpolation
  Matrix cov = cfg.initial_scale * cfg.initial_scale * spread * xtwx.inverse();
  cov = (0.5 * (cov + cov.transpose())).eval();

  const LogDensity target = [&](const Vector& beta) { return log_posterior(data, tau, prior, beta); };
  return sample_log_density(target, start, cov, cfg);
}

Chain run_chains(const Dataset& data, QuantileLevel tau, const PriorSpec& prior,
                 const SamplerConfig& cfg) {
  return run_chains(data, tau, prior, cfg, qr_fit(data, tau).beta_hat);
}

namespace {

struct SplitStats {
  std::vector<Vector> halves;  // 2 * chains sequences
  Vector means;
  Vector variances;  // denominator N - 1
  double within = 0.0;
  double var_plus = 0.0;
};

SplitStats split(const Matrix& draws, int chains, Eigen::Index col) {
  const Eigen::Index per_chain = draws.rows() / chains;
  const Eigen::Index half = per_chain / 2;
  SplitStats s;
  for (int c = 0; c < chains; ++c) {
    const Eigen::Index base = c * per_chain;
    // An odd middle draw is dropped.
    s.halves.emplace_back(draws.col(col).segment(base, half));
    s.halves.emplace_back(draws.col(col).segment(base + per_chain - half, half));
  }
  const auto m = static_cast<Eigen::Index>(s.halves.size());
  s.means.resize(m);
  s.variances.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Vector& h = s.halves[static_cast<std::size_t>(k)];
    s.means(k) = h.mean();
    s.variances(k) = (h.array() - s.means(k)).square().sum() / static_cast<double>(half - 1);
  }
  s.within = s.variances.mean();
  const double between_over_n = m > 1 ? (s.means.array() - s.means.mean()).square().sum() / (m - 1.0) : 0.0;
  const double n = static_cast<double>(half);
  s.var_plus = (n - 1.0) / n * s.within + between_over_n;
  return s;
}

double autocovariance(const Vector& h, double mean, Eigen::Index lag) {
  const Eigen::Index n = h.size();
  double acc = 0.0;
  for (Eigen::Index i = 0; i + lag < n; ++i) acc += (h(i) - mean) * (h(i + lag) - mean);
  return acc / static_cast<double>(n);
}

}  // namespace

Diagnostics diagnostics(const Matrix& draws, int chains) {
  if (chains < 1 || draws.rows() % chains != 0) throw ChainError("draws are not evenly split across chains");
  const Eigen::Index per_chain = draws.rows() / chains;
  if (per_chain / 2 < 100) {
    throw ChainError("chain too short for diagnostics: need at least 100 draws per split half");
  }
  const Eigen::Index d = draws.cols();
  Diagnostics out;
  out.ess.resize(d);
  out.split_rhat.resize(d);
  for (Eigen::Index col = 0; col < d; ++col) {
    const SplitStats s = split(draws, chains, col);
    if (!(s.within > 0.0)) throw ChainError("zero variance in coordinate " + std::to_string(col));
    out.split_rhat(col) = std::sqrt(s.var_plus / s.within);

    const Eigen::Index n = s.halves.front().size();
    const auto m = static_cast<double>(s.halves.size());
    auto rho = [&](Eigen::Index lag) {
      double mean_acov = 0.0;
      for (std::size_t k = 0; k < s.halves.size(); ++k) {
        mean_acov += autocovariance(s.halves[k], s.means(static_cast<Eigen::Index>(k)), lag);
      }
      mean_acov /= m;
      return 1.0 - (s.within - mean_acov) / s.var_plus;
    };
    // Geyer's initial positive, monotone sequence of paired autocorrelations.
    double tau_sum = 0.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (Eigen::Index lag = 0; lag + 1 < n; lag += 2) {
      double pair = rho(lag) + rho(lag + 1);
      if (pair <= 0.0) break;
      pair = std::min(pair, prev_pair);
      tau_sum += pair;
      prev_pair = pair;
    }
    const double total = m * static_cast<double>(n);
    const double tau_int = std::max(-1.0 + 2.0 * tau_sum, 1.0 / std::log10(total));
    out.ess(col) = std::min(total / tau_int, total);
  }
  out.min_ess = out.ess.minCoeff();
  out.max_rhat = out.split_rhat.maxCoeff();
  return out;
}

Diagnostics diagnostics(const Chain& chain) { return diagnostics(chain.draws, chain.chains); }

void write_draws_csv(std::ostream& out, const Chain& chain) {
  out << "chain,iter";
  for (Eigen::Index j = 0; j < chain.dim(); ++j) out << ",beta_" << j;
  out << ",log_post\n";
  out << std::setprecision(17);
  for (int c = 0; c < chain.chains; ++c) {
    for (int k = 0; k < chain.draws_per_chain; ++k) {
      const Eigen::Index row = static_cast<Eigen::Index>(c) * chain.draws_per_chain + k;
      out << c << ',' << k;
      for (Eigen::Index j = 0; j < chain.dim(); ++j) out << ',' << chain.draws(row, j);
      out << ',' << chain.log_post(row) << '\n';
    }
  }
}

}  // namespace bqr
