#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bqr/core_model.hpp"
#include "bqr/inference.hpp"
#include "bqr/sampler.hpp"

namespace bqr {

/// Reads `y,<covariates...>[,zeta]` with a header row. Covariates keep file
/// order and names; the intercept column is prepended. The weights column is
/// optional and matched by name.
Dataset load_csv(const std::string& path, const std::string& weights_column = "zeta");
Dataset parse_csv(std::istream& in, const std::string& weights_column = "zeta");

/// Inverse of parse_csv; floats use 17 significant digits.
void write_csv(std::ostream& out, const Dataset& data, const std::string& weights_column = "zeta");

enum class Command { Fit, Simulate, Sweep };

struct RunConfig {
  Command command = Command::Fit;
  std::string input;
  std::string output;
  double tau = 0.5;
  PriorFamily family = PriorFamily::ClippedAbsolute;
  std::optional<double> lambda;
  double alpha = 0.10;
  std::uint64_t seed = 0;
  SamplerConfig sampler;
  std::string weights_column = "zeta";
  std::string draws_output;  // optional draw dump for fit

  // simulate / sweep
  Eigen::Index n = 200;
  int reps = 200;
  bool weighted = false;
  bool baselines = false;  // add Oracle and Full rows
  std::vector<double> lambdas;

  void validate() const;
};

/// "a:b:step" or "a,b,c".
std::vector<double> parse_lambda_list(const std::string& spec);

/// Table-1 defaults: 0.066 for n = 200, 0.051 for n = 500, none otherwise.
std::optional<double> default_simulation_lambda(Eigen::Index n);

/// Exit codes: 0 success, 1 hard error, 2 soft diagnostic failure (outputs still written).
int cmd_fit(const RunConfig& cfg);
int cmd_simulate(const RunConfig& cfg);
int cmd_sweep(const RunConfig& cfg);

/// Parses argv and dispatches; usage errors return 1.
int run_cli(int argc, char** argv);

}  // namespace bqr
