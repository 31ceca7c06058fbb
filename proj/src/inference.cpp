#include "bqr/inference.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace bqr {

std::pair<CoefVector, Matrix> posterior_moments(const Matrix& draws) {
  if (draws.rows() < 2) throw ChainError("posterior moments need at least two draws");
  const CoefVector mean = draws.colwise().mean().transpose();
  const Matrix centered = draws.rowwise() - mean.transpose();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(draws.rows() - 1);
  cov = (0.5 * (cov + cov.transpose())).eval();
  return {mean, cov};
}

Matrix compute_d_hat(const Dataset& data) {
  const Matrix& x = data.x();
  Matrix d;
  if (data.zeta()) {
    const Vector w = data.zeta()->cwiseAbs2();
    d = x.transpose() * w.asDiagonal() * x;
  } else {
    d = x.transpose() * x;
  }
  d /= static_cast<double>(data.n());
  return 0.5 * (d + d.transpose());
}

Matrix adjust_covariance(const Matrix& sigma_check, const Matrix& d_hat, Eigen::Index n, QuantileLevel tau) {
  if (sigma_check.rows() != sigma_check.cols() || d_hat.rows() != d_hat.cols() ||
      sigma_check.rows() != d_hat.rows()) {
    throw DimensionError("posterior covariance and D-hat must be square and conformable");
  }
  if (n < 1) throw DataError("sample size must be positive");
  const double scale = static_cast<double>(n) * tau.value() * (1.0 - tau.value());
  const Matrix a = scale * sigma_check * d_hat * sigma_check;
  return 0.5 * (a + a.transpose());
}

double adjustment_weight(double lambda, Eigen::Index n, double beta_hat_j) {
  const double cap = std::sqrt(static_cast<double>(n)) * lambda;
  const double ratio =
      beta_hat_j == 0.0 ? std::numeric_limits<double>::infinity() : lambda / std::abs(beta_hat_j);
  return std::min(cap, std::max(1.0, ratio));
}

Vector adjustment_weights(const PriorChoice& prior, Eigen::Index n, const CoefVector& beta_hat) {
  Vector eta = Vector::Ones(beta_hat.size());
  if (prior.family == PriorFamily::Flat) return eta;
  for (Eigen::Index j = 1; j < beta_hat.size(); ++j) eta(j) = adjustment_weight(prior.lambda, n, beta_hat(j));
  return eta;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw DataError("normal quantile needs p in [0, 1]");
  }
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r + 67265.770927008700853) * r +
                45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((r * 5226.495278852545925 + 28729.085735721942674) * r + 39307.89580009271061) * r +
                21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = std::sqrt(-std::log(q < 0.0 ? p : 1.0 - p));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                 1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
              4.6303378461565452959) * r + 1.42343711074968357734) /
            (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                 0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
              2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                 0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
              5.4637849111641143699) * r + 6.6579046435011037772) /
            (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                 7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
              0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -value : value;
}

std::vector<Interval> confidence_intervals(const CoefVector& beta_check, const Matrix& sigma_adj,
                                           const Vector& eta, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DataError("alpha must lie in (0, 1)");
  if (sigma_adj.rows() != beta_check.size() || sigma_adj.cols() != beta_check.size() ||
      eta.size() != beta_check.size()) {
    throw DimensionError("interval inputs differ in dimension");
  }
  const double z = normal_quantile(1.0 - alpha / 2.0);
  std::vector<Interval> out;
  out.reserve(static_cast<std::size_t>(beta_check.size()));
  for (Eigen::Index j = 0; j < beta_check.size(); ++j) {
    double var = sigma_adj(j, j);
    if (var < -1e-12) {
      throw std::runtime_error("adjusted variance of coefficient " + std::to_string(j) + " is negative");
    }
    var = std::max(var, 0.0);
    const double half = z * eta(j) * std::sqrt(var);
    out.push_back({beta_check(j) - half, beta_check(j) + half, 1.0 - alpha});
  }
  return out;
}

PriorSpec build_prior(const PriorChoice& prior, const Dataset& data, const CoefVector& beta_hat) {
  switch (prior.family) {
    case PriorFamily::AdaptiveLasso:
      return PriorSpec::adaptive_lasso(prior.lambda, adaptive_weights(beta_hat), data.n());
    case PriorFamily::ClippedAbsolute:
      return PriorSpec::clipped_absolute(prior.lambda, data.p(), data.n());
    case PriorFamily::Flat:
      break;
  }
  return PriorSpec::flat(data.p());
}

PosteriorSummary fit_and_infer(const Dataset& data, QuantileLevel tau, const PriorChoice& prior,
                               const SamplerConfig& cfg, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DataError("alpha must lie in (0, 1)");
  PosteriorSummary s;
  s.names = data.names();
  s.n = data.n();
  s.tau = tau.value();
  s.alpha = alpha;
  s.prior = prior;

  const QrFit full = qr_fit(data, tau);
  s.beta_hat = full.beta_hat;
  if (!full.converged) s.flags.push_back("quantile regression fit did not converge");
  const PriorSpec spec = build_prior(prior, data, s.beta_hat);

  const Chain chain = run_chains(data, tau, spec, cfg, s.beta_hat);
  s.acceptance_rate = chain.acceptance_rate;
  if (chain.acceptance_warning) {
    std::ostringstream msg;
    msg << "acceptance rate " << chain.acceptance_rate << " outside [0.05, 0.95]";
    s.flags.push_back(msg.str());
  }

  std::tie(s.beta_check, s.sigma_check) = posterior_moments(chain.draws);
  s.d_hat = compute_d_hat(data);
  s.sigma_adj = adjust_covariance(s.sigma_check, s.d_hat, s.n, tau);
  s.eta = adjustment_weights(prior, s.n, s.beta_hat);
  s.intervals = confidence_intervals(s.beta_check, s.sigma_adj, s.eta, alpha);

  try {
    s.diagnostics = diagnostics(chain);
    if (s.diagnostics.max_rhat > 1.05) {
      s.soft_fail = true;
      s.flags.push_back("max split-Rhat " + std::to_string(s.diagnostics.max_rhat) + " > 1.05");
    }
    if (s.diagnostics.min_ess < 100.0) {
      s.soft_fail = true;
      s.flags.push_back("min ESS " + std::to_string(s.diagnostics.min_ess) + " < 100");
    }
  } catch (const ChainError& e) {
    s.soft_fail = true;
    s.flags.push_back(std::string("diagnostics unavailable: ") + e.what());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    s.diagnostics.ess = Vector::Constant(data.cols(), nan);
    s.diagnostics.split_rhat = Vector::Constant(data.cols(), nan);
    s.diagnostics.min_ess = nan;
    s.diagnostics.max_rhat = nan;
  }
  return s;
}

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

// JSON has no NaN; unavailable diagnostics serialize as null.
nlohmann::json nullable(const Vector& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v(i))) {
      arr.push_back(v(i));
    } else {
      arr.push_back(nullptr);
    }
  }
  return arr;
}

}  // namespace

nlohmann::json summary_to_json(const PosteriorSummary& s) {
  Vector lo(static_cast<Eigen::Index>(s.intervals.size())), hi(lo.size());
  for (std::size_t j = 0; j < s.intervals.size(); ++j) {
    lo(static_cast<Eigen::Index>(j)) = s.intervals[j].lo;
    hi(static_cast<Eigen::Index>(j)) = s.intervals[j].hi;
  }
  nlohmann::json j;
  j["coef"] = s.names;
  j["mean"] = to_std(s.beta_check);
  j["ci_lo"] = to_std(lo);
  j["ci_hi"] = to_std(hi);
  j["eta"] = to_std(s.eta);
  j["se_adj"] = to_std(s.se_adj());
  j["ess"] = nullable(s.diagnostics.ess);
  j["rhat"] = nullable(s.diagnostics.split_rhat);
  j["beta_hat"] = to_std(s.beta_hat);
  j["n"] = s.n;
  j["tau"] = s.tau;
  j["alpha"] = s.alpha;
  j["level"] = 1.0 - s.alpha;
  j["prior"] = to_string(s.prior.family);
  if (s.prior.family != PriorFamily::Flat) j["lambda"] = s.prior.lambda;
  j["acceptance_rate"] = s.acceptance_rate;
  j["soft_fail"] = s.soft_fail;
  j["flags"] = s.flags;
  return j;
}

void write_summary_csv(std::ostream& out, const PosteriorSummary& s) {
  out << "coef,mean,ci_lo,ci_hi,eta,se_adj,ess,rhat\n";
  out << std::setprecision(17);
  const Vector se = s.se_adj();
  for (std::size_t j = 0; j < s.names.size(); ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    out << s.names[j] << ',' << s.beta_check(k) << ',' << s.intervals[j].lo << ',' << s.intervals[j].hi << ','
        << s.eta(k) << ',' << se(k) << ',' << s.diagnostics.ess(k) << ',' << s.diagnostics.split_rhat(k) << '\n';
  }
}

}  // namespace bqr
