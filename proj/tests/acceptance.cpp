// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [reps]   (default 200 Monte Carlo replications per design)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bqr/parallel.hpp"
#include "bqr/qr_solver.hpp"
#include "bqr/simulation.hpp"
#include "oracles.hpp"
#include "property_checks.hpp"

using namespace bqr;

namespace {

int failures = 0;

void verdict(int id, bool ok, const std::string& what) {
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << "criterion " << id << ": " << what << std::endl;
  if (!ok) ++failures;
}

std::string fmt(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

bool within_rel(double value, double target, double rel) { return std::abs(value - target) <= rel * std::abs(target); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SimulationReport table_run(Eigen::Index n, double lambda, int reps, bool weighted, bool baselines) {
  MonteCarloConfig mc;
  mc.dgp.n = n;
  mc.dgp.seed = 2024;
  mc.prior = {PriorFamily::ClippedAbsolute, lambda};
  mc.alpha = 0.10;
  mc.tau = 0.5;
  mc.reps = reps;
  mc.weighted = weighted;
  mc.oracle_baseline = baselines;
  mc.full_baseline = baselines;
  const auto t0 = std::chrono::steady_clock::now();
  SimulationReport r = run_monte_carlo(mc);
  std::cout << "  run n=" << n << " lambda=" << lambda << (weighted ? " weighted" : "") << " reps=" << reps
            << " soft_failures=" << r.soft_failures << " time=" << fmt(seconds_since(t0), 1) << "s" << std::endl;
  return r;
}

void print_row(const MethodReport& m, const std::vector<std::string>& labels) {
  std::cout << "    " << m.method << ":";
  for (const auto& l : labels) {
    const auto& s = m.at(l);
    std::cout << "  " << l << " cov " << fmt(s.coverage, 1) << " (" << fmt(s.coverage_se, 1) << ") len "
              << fmt(s.length, 1) << " (" << fmt(s.length_se, 1) << ")";
  }
  std::cout << std::endl;
}

// Coverage bands and target lengths for one design.
void table_criterion(int id, const SimulationReport& r, double cov_lo, double cov_hi, double zero_cov_min,
                     double len2, double len5, double len0) {
  const MethodReport& b = r.method("BayesAdj");
  for (const auto& m : r.methods) print_row(m, {"beta_2", "beta_5", "beta_zeros"});
  const double c2 = b.at("beta_2").coverage, c5 = b.at("beta_5").coverage, c0 = b.at("beta_zeros").coverage;
  const double l2 = b.at("beta_2").length, l5 = b.at("beta_5").length, l0 = b.at("beta_zeros").length;
  const bool cov_ok = c2 >= cov_lo && c2 <= cov_hi && c5 >= cov_lo && c5 <= cov_hi && c0 >= zero_cov_min;
  const bool len_ok = within_rel(l2, len2, 0.15) && within_rel(l5, len5, 0.15) && within_rel(l0, len0, 0.15);
  std::ostringstream msg;
  msg << "BayesAdj n=" << r.n << " coverage " << fmt(c2, 1) << "/" << fmt(c5, 1) << "/" << fmt(c0, 1) << " (need ["
      << cov_lo << "," << cov_hi << "] and zeros >= " << zero_cov_min << "), lengths x100 " << fmt(l2, 1) << "/"
      << fmt(l5, 1) << "/" << fmt(l0, 1) << " (need within 15% of " << len2 << "/" << len5 << "/" << len0 << ")";
  verdict(id, cov_ok && len_ok, msg.str());
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::atoi(argv[1]) : 200;
  if (reps < 2) {
    std::cerr << "reps must be at least 2\n";
    return 2;
  }
  const auto start = std::chrono::steady_clock::now();
  std::cout << "acceptance run, " << reps << " replications per design, " << thread_count() << " thread(s)"
            << std::endl;

  const SimulationReport r200 = table_run(200, 0.066, reps, false, true);
  table_criterion(1, r200, 88.0, 97.0, 92.0, 28.1, 32.7, 11.7);

  const SimulationReport r500 = table_run(500, 0.051, reps, false, true);
  table_criterion(2, r500, 85.0, 95.0, 91.0, 16.3, 19.3, 6.1);

  {
    const double z200 = r200.method("BayesAdj").at("beta_zeros").length;
    const double z500 = r500.method("BayesAdj").at("beta_zeros").length;
    const double bound = 0.85 * std::sqrt(200.0 / 500.0) * z200;
    verdict(3, z500 < bound,
            "inactive length n=500 " + fmt(z500) + " < 0.85*sqrt(0.4)*" + fmt(z200) + " = " + fmt(bound) +
                " (ratio to sqrt(0.4)*n=200 length " + fmt(z500 / (std::sqrt(0.4) * z200), 3) + ")");
  }

  const std::vector<int> active{0, 2, 5};
  {
    double gap = 0.0, err = 0.0;
    for (const auto& rec : r500.records) {
      double g = 0.0, e = 0.0;
      for (int j : active) {
        g += std::pow(rec.beta_check(j) - rec.oracle_beta(j), 2);
        e += std::pow(rec.oracle_beta(j) - DgpConfig{}.coef(j), 2);
      }
      gap += std::sqrt(g);
      err += std::sqrt(e);
    }
    gap /= static_cast<double>(r500.records.size());
    err /= static_cast<double>(r500.records.size());
    verdict(4, gap <= 0.25 * err,
            "mean |check_S - oracle_S| = " + fmt(gap, 4) + " <= 0.25 * mean |oracle_S - truth_S| = " +
                fmt(0.25 * err, 4) + " (ratio " + fmt(gap / err, 3) + ")");
  }

  const auto t_pop = std::chrono::steady_clock::now();
  const EfficiencyEstimates pop = estimate_population_matrices(DgpConfig{}, 1000000, 99);
  std::cout << "  population matrices from 1e6 draws in " << fmt(seconds_since(t_pop), 1) << "s" << std::endl;
  {
    const Matrix oracle_cov = pop.oracle_covariance(0.5);
    bool ok = true;
    std::ostringstream msg;
    msg << "n*Sigma_adj(j,j) vs tau(1-tau)[G^-1 D G^-1](j,j):";
    for (std::size_t k = 0; k < active.size(); ++k) {
      double avg = 0.0;
      for (const auto& rec : r500.records) avg += 500.0 * rec.sigma_adj_diag(active[k]);
      avg /= static_cast<double>(r500.records.size());
      const double target = oracle_cov(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
      ok = ok && within_rel(avg, target, 0.15);
      msg << " j=" << active[k] << " " << fmt(avg, 3) << " vs " << fmt(target, 3) << " (" << fmt(100.0 * (avg / target - 1.0), 1)
          << "%)";
    }
    verdict(5, ok, msg.str());
  }

  {
    const auto one = props::sampler_vs_quadrature_1d(101);
    const auto two = props::sampler_vs_quadrature_2d(202);
    const bool ok = one.worst_z <= 3.0 && two.worst_z <= 3.0 && one.min_ess >= 400.0 && two.min_ess >= 400.0;
    verdict(6, ok,
            "quadrature oracles: 1-D worst |z| " + fmt(one.worst_z) + " min ESS " + fmt(one.min_ess, 0) +
                "; 2-D worst |z| " + fmt(two.worst_z) + " min ESS " + fmt(two.min_ess, 0) + " (need |z| <= 3, ESS >= 400)");
  }

  {
    std::mt19937_64 rng(7);
    double worst = 0.0, worst_grid_only = 0.0;
    bool no_worse_than_grid = true;
    for (int k = 0; k < 50; ++k) {
      const int p = k % 3;
      const Dataset d = oracle::random_integer_problem(rng, std::uniform_int_distribution<int>(p + 2, 12)(rng), p, k % 4 == 0);
      const double tau = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
      const double fit = qr_fit(d, QuantileLevel(tau)).objective;
      const double grid = oracle::grid_minimum(d, tau, -10.0, 10.0, 1e-3);
      const double exhaustive = std::min(grid, oracle::elemental_minimum(d, tau));
      worst = std::max(worst, std::abs(fit - exhaustive));
      worst_grid_only = std::max(worst_grid_only, grid - fit);
      no_worse_than_grid = no_worse_than_grid && fit <= grid + 1e-9;
    }
    int exact = 0;
    for (int k = 0; k < 50; ++k) {
      const int n = std::uniform_int_distribution<int>(1, 12)(rng);
      std::vector<double> y(static_cast<std::size_t>(n));
      for (auto& v : y) v = std::uniform_int_distribution<int>(-5, 5)(rng) * 0.5;
      const double tau = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
      const Dataset d(Matrix::Ones(n, 1), Eigen::Map<Vector>(y.data(), n));
      exact += qr_fit(d, QuantileLevel(tau)).beta_hat(0) == sample_quantile(y, QuantileLevel(tau)) ? 1 : 0;
    }
    verdict(7, worst <= 2e-3 && no_worse_than_grid && exact == 50,
            "50 small instances: max |objective - exhaustive minimum| " + fmt(worst, 9) + " (grid-only gap " +
                fmt(worst_grid_only, 6) + "), never above grid: " + (no_worse_than_grid ? "yes" : "no") +
                "; intercept-only equals sample_quantile " + std::to_string(exact) + "/50");
  }

  {
    const Matrix diff = pop.v_s.inverse() - pop.q_s.inverse();
    const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (diff + diff.transpose())).eigenvalues().minCoeff();
    const SimulationReport weighted = table_run(500, 0.051, reps, true, false);
    auto sd = [](const std::vector<double>& v) {
      double m = 0.0, s = 0.0;
      for (double x : v) m += x;
      m /= static_cast<double>(v.size());
      for (double x : v) s += (x - m) * (x - m);
      return std::sqrt(s / static_cast<double>(v.size() - 1));
    };
    std::vector<double> w2, o2;
    for (const auto& rec : weighted.records) w2.push_back(rec.beta_check(2));
    for (const auto& rec : r500.records) o2.push_back(rec.oracle_beta(2));
    const double sd_w = sd(w2), sd_o = sd(o2);
    verdict(8, min_eig >= -1e-3 && sd_w <= 1.05 * sd_o,
            "min eig(V_S^-1 - Q_S^-1) = " + fmt(min_eig, 6) + " >= -1e-3; weighted SD(beta_2) " + fmt(sd_w, 4) +
                " <= 1.05 * oracle SD " + fmt(sd_o, 4) + " (ratio " + fmt(sd_w / sd_o, 3) + ")");
  }

  {
    const auto results = props::all_properties(20240601, 100);
    int bad = 0;
    for (const auto& r : results) {
      if (!r.ok()) {
        ++bad;
        std::cout << "    property failed: " << r.module << " / " << r.name << ": " << r.first_failure << std::endl;
      }
    }
    const bool same = props::end_to_end_bytes(5) == props::end_to_end_bytes(5);
    verdict(9, bad == 0 && same,
            std::to_string(results.size() - static_cast<std::size_t>(bad)) + "/" + std::to_string(results.size()) +
                " property suites green at 100 cases each; end-to-end outputs byte-identical: " + (same ? "yes" : "no"));
  }

  std::cout << "acceptance finished in " << fmt(seconds_since(start), 1) << "s, " << failures << " criterion failure(s)"
            << std::endl;
  return failures == 0 ? 0 : 1;
}
