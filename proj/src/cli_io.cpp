#include "bqr/cli_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "bqr/simulation.hpp"

namespace bqr {

namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc() || ptr != last) {
    throw DataError("non-numeric value '" + cell + "' at row " + std::to_string(row) + ", column '" + column + "'");
  }
  if (!std::isfinite(value)) {
    throw DataError("non-finite value '" + cell + "' at row " + std::to_string(row) + ", column '" + column + "'");
  }
  return value;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

Dataset parse_csv(std::istream& in, const std::string& weights_column) {
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw DataError("empty CSV: missing header row");
  const std::vector<std::string> header = split_fields(line);

  int y_col = -1, w_col = -1;
  std::vector<int> covariate_cols;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "y") {
      if (y_col >= 0) throw DataError("duplicate 'y' column");
      y_col = static_cast<int>(c);
    } else if (!weights_column.empty() && header[c] == weights_column) {
      w_col = static_cast<int>(c);
    } else {
      covariate_cols.push_back(static_cast<int>(c));
      names.push_back(header[c]);
    }
  }
  if (y_col < 0) throw DataError("CSV header has no 'y' column");

  std::vector<std::vector<double>> rows;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw DataError("row " + std::to_string(row) + " has " + std::to_string(fields.size()) + " fields, header has " +
                      std::to_string(header.size()));
    }
    std::vector<double> values(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) values[c] = parse_cell(fields[c], row, header[c]);
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw DataError("CSV has a header but no data rows");

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(covariate_cols.size());
  Matrix covariates(n, p);
  Vector y(n);
  std::optional<Vector> zeta;
  if (w_col >= 0) zeta = Vector(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    y(i) = r[static_cast<std::size_t>(y_col)];
    for (Eigen::Index j = 0; j < p; ++j) covariates(i, j) = r[static_cast<std::size_t>(covariate_cols[static_cast<std::size_t>(j)])];
    if (zeta) (*zeta)(i) = r[static_cast<std::size_t>(w_col)];
  }
  return Dataset::from_covariates(covariates, std::move(y), std::move(zeta), std::move(names));
}

Dataset load_csv(const std::string& path, const std::string& weights_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file '" + path + "'");
  return parse_csv(in, weights_column);
}

void write_csv(std::ostream& out, const Dataset& data, const std::string& weights_column) {
  out << "y";
  for (Eigen::Index j = 1; j < data.cols(); ++j) out << ',' << data.names()[static_cast<std::size_t>(j)];
  if (data.weighted()) out << ',' << weights_column;
  out << '\n' << std::setprecision(17);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out << data.y()(i);
    for (Eigen::Index j = 1; j < data.cols(); ++j) out << ',' << data.x()(i, j);
    if (data.weighted()) out << ',' << (*data.zeta())(i);
    out << '\n';
  }
}

std::vector<double> parse_lambda_list(const std::string& spec) {
  std::vector<double> out;
  auto number = [&](const std::string& s) {
    double v = 0.0;
    const auto t = trim(s);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v) || v <= 0.0) {
      throw DataError("invalid lambda value '" + s + "'");
    }
    return v;
  };
  if (spec.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    if (parts.size() != 3) throw DataError("lambda range must look like start:stop:step");
    const double start = number(parts[0]), stop = number(parts[1]), step = number(parts[2]);
    if (stop < start) throw DataError("lambda range stop is below start");
    const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (long k = 0; k < count; ++k) out.push_back(start + static_cast<double>(k) * step);
  } else {
    std::stringstream ss(spec);
    for (std::string part; std::getline(ss, part, ',');) out.push_back(number(part));
  }
  if (out.empty()) throw DataError("empty lambda list");
  return out;
}

std::optional<double> default_simulation_lambda(Eigen::Index n) {
  if (n == 200) return 0.066;
  if (n == 500) return 0.051;
  return std::nullopt;
}

void RunConfig::validate() const {
  QuantileLevel{tau};
  if (!(alpha > 0.0 && alpha < 1.0)) throw DataError("--alpha must lie in (0, 1)");
  if (lambda && !(*lambda > 0.0 && std::isfinite(*lambda))) throw DataError("--lambda must be positive");
  sampler.validate();
  switch (command) {
    case Command::Fit:
      if (input.empty()) throw DataError("fit needs --input");
      if (family != PriorFamily::Flat && !lambda) throw DataError("fit needs --lambda for the al and ca priors");
      break;
    case Command::Simulate:
    case Command::Sweep:
      if (reps < 1) throw DataError("--reps must be at least 1");
      if (n < 8) throw DataError("--n must be at least 8 for the simulation design");
      if (tau != 0.5) throw DataError("the simulation design is a median regression; --tau must be 0.5");
      break;
  }
}

int cmd_fit(const RunConfig& cfg) {
  const Dataset data = load_csv(cfg.input, cfg.weights_column);
  SamplerConfig sc = cfg.sampler;
  sc.seed = cfg.seed;
  const PriorChoice prior{cfg.family, cfg.lambda.value_or(0.0)};
  const PosteriorSummary summary = fit_and_infer(data, QuantileLevel(cfg.tau), prior, sc, cfg.alpha);

  const std::string prefix = cfg.output.empty() ? "bqr_fit" : cfg.output;
  nlohmann::json j = summary_to_json(summary);
  j["seed"] = cfg.seed;
  {
    auto out = open_output(prefix + ".json");
    out << j.dump(2) << '\n';
  }
  {
    auto out = open_output(prefix + ".csv");
    write_summary_csv(out, summary);
  }
  if (!cfg.draws_output.empty()) {
    const Chain chain = run_chains(data, QuantileLevel(cfg.tau), build_prior(prior, data, summary.beta_hat), sc,
                                   summary.beta_hat);
    auto out = open_output(cfg.draws_output);
    write_draws_csv(out, chain);
  }
  for (const auto& flag : summary.flags) std::cerr << "warning: " << flag << '\n';
  return summary.soft_fail ? 2 : 0;
}

namespace {

MonteCarloConfig monte_carlo_config(const RunConfig& cfg) {
  MonteCarloConfig mc;
  mc.dgp.n = cfg.n;
  mc.dgp.seed = cfg.seed;
  mc.prior.family = cfg.family;
  mc.alpha = cfg.alpha;
  mc.tau = cfg.tau;
  mc.reps = cfg.reps;
  mc.weighted = cfg.weighted;
  mc.sampler = cfg.sampler;
  mc.oracle_baseline = cfg.baselines;
  mc.full_baseline = cfg.baselines;
  return mc;
}

void report_progress(const SimulationReport& report) {
  std::cerr << "n=" << report.n << " lambda=" << report.lambda << " reps=" << report.reps
            << " soft_failures=" << report.soft_failures << " runtime=" << std::fixed << std::setprecision(1)
            << report.runtime_seconds << "s" << std::defaultfloat << '\n';
  if (report.degenerate_se) std::cerr << "warning: a single replication gives degenerate standard errors\n";
}

}  // namespace

int cmd_simulate(const RunConfig& cfg) {
  MonteCarloConfig mc = monte_carlo_config(cfg);
  if (cfg.family != PriorFamily::Flat) {
    const auto lambda = cfg.lambda ? cfg.lambda : default_simulation_lambda(cfg.n);
    if (!lambda) throw DataError("--lambda is required unless --n is 200 or 500");
    mc.prior.lambda = *lambda;
  }
  const SimulationReport report = run_monte_carlo(mc);
  report_progress(report);
  if (cfg.output.empty()) {
    write_report_csv(std::cout, report);
  } else {
    auto out = open_output(cfg.output);
    write_report_csv(out, report);
  }
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  if (cfg.lambdas.empty()) throw DataError("sweep needs --lambdas");
  const MonteCarloConfig mc = monte_carlo_config(cfg);
  const std::vector<SimulationReport> reports = lambda_sweep(mc, cfg.lambdas);
  for (const auto& r : reports) report_progress(r);
  if (cfg.output.empty()) {
    write_sweep_csv(std::cout, reports);
  } else {
    auto out = open_output(cfg.output);
    write_sweep_csv(out, reports);
  }
  return 0;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Posterior inference for sparse linear quantile regression"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string prior_name = "ca";
  double lambda = 0.0;
  std::string lambdas;
  bool full = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--prior", prior_name, "Prior family: al, ca or flat")->default_val("ca");
    sub->add_option("--alpha", cfg.alpha, "Intervals have level 1 - alpha")->default_val(0.10);
    sub->add_option("--seed", cfg.seed, "Seed for all randomness")->default_val(0);
    sub->add_option("--chains", cfg.sampler.chains, "MCMC chains")->default_val(cfg.sampler.chains);
    sub->add_option("--iterations", cfg.sampler.iterations, "Iterations per chain, including burn-in")
        ->default_val(cfg.sampler.iterations);
    sub->add_option("--burnin", cfg.sampler.burnin, "Burn-in iterations per chain")->default_val(cfg.sampler.burnin);
    sub->add_option("--thin", cfg.sampler.thinning, "Thinning interval")->default_val(cfg.sampler.thinning);
    sub->add_option("--init-scale", cfg.sampler.initial_scale, "Initial proposal scale")
        ->default_val(cfg.sampler.initial_scale);
    sub->add_option("--out", cfg.output, "Output path (fit: file prefix)");
  };

  CLI::App* fit = app.add_subcommand("fit", "Fit one data set and write interval summaries");
  add_common(fit);
  fit->add_option("--input", cfg.input, "CSV with columns y,<covariates...>[,zeta]")->required();
  fit->add_option("--tau", cfg.tau, "Quantile level in (0, 1)")->default_val(0.5);
  auto* fit_lambda = fit->add_option("--lambda", lambda, "Shrinkage tuning parameter (required for al/ca)");
  fit->add_option("--weights-col", cfg.weights_column, "Name of the observation-weight column")->default_val("zeta");
  fit->add_option("--draws", cfg.draws_output, "Also dump posterior draws to this CSV");

  CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo coverage study on the built-in design");
  add_common(sim);
  sim->add_option("--n", cfg.n, "Sample size")->default_val(200);
  auto* sim_lambda = sim->add_option("--lambda", lambda, "Tuning parameter (defaults for n = 200, 500)");
  auto* sim_reps = sim->add_option("--reps", cfg.reps, "Replications")->default_val(200);
  sim->add_option("--tau", cfg.tau, "Quantile level (the design requires 0.5)")->default_val(0.5);
  sim->add_flag("--weighted", cfg.weighted, "Weight observations by the true f(0 | x)");
  sim->add_flag("--baselines", cfg.baselines, "Add Oracle and Full flat-prior rows");
  sim->add_flag("--full", full, "Use 2000 replications");

  CLI::App* sweep = app.add_subcommand("sweep", "Coverage and length across a lambda grid");
  add_common(sweep);
  sweep->add_option("--n", cfg.n, "Sample size")->default_val(500);
  sweep->add_option("--lambdas", lambdas, "start:stop:step or a comma list")->required();
  auto* sweep_reps = sweep->add_option("--reps", cfg.reps, "Replications per lambda")->default_val(200);
  sweep->add_flag("--weighted", cfg.weighted, "Weight observations by the true f(0 | x)");
  sweep->add_flag("--baselines", cfg.baselines, "Add Oracle and Full flat-prior rows");
  sweep->add_flag("--full", full, "Use 2000 replications");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    cfg.family = parse_prior_family(prior_name);
    if (fit->parsed()) {
      cfg.command = Command::Fit;
      if (fit_lambda->count() > 0) cfg.lambda = lambda;
    } else if (sim->parsed()) {
      cfg.command = Command::Simulate;
      if (sim_lambda->count() > 0) cfg.lambda = lambda;
      if (full && sim_reps->count() == 0) cfg.reps = 2000;
    } else {
      cfg.command = Command::Sweep;
      cfg.lambdas = parse_lambda_list(lambdas);
      if (full && sweep_reps->count() == 0) cfg.reps = 2000;
    }
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  }

  try {
    switch (cfg.command) {
      case Command::Fit: return cmd_fit(cfg);
      case Command::Simulate: return cmd_simulate(cfg);
      case Command::Sweep: return cmd_sweep(cfg);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace bqr
