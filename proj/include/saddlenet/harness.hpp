#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "saddlenet/catalog.hpp"
#include "saddlenet/solvers.hpp"

namespace saddlenet::harness {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitDivergence = 2, kExitInvariant = 3 };

struct VerifyOptions {
  int samples = 1000;           ///< sampled pairs for monotonicity / Lipschitz
  int fd_points = 100;          ///< finite-difference points per objective
  int equivalence_iters = 1000; ///< distributed vs stacked comparison length
  int fixed_point_steps = 100;
  int certificate_iters = 2000; ///< trace length for rate / Delta_k / EG checks
};

struct ExperimentConfig {
  catalog::InstanceSpec instance;
  std::vector<Method> methods;
  /// 0: the instance's recommended step, else 0.9 of the bound.
  double alpha = 0.0;
  long iters = 1000;
  double stop_tol = 1e-10;
  int record_every = 1;
  bool allow_unsafe_step = false;
  /// Comparison mode: every method gets the same gradient-call budget
  /// (iterations = budget / calls per iteration) instead of the same `iters`.
  bool compare = false;
  long grad_budget = 0;
  std::string out_dir = "out";
  int jobs = 1;
  VerifyOptions verify;
};

/// Parses the YAML schema documented in the README. Errors are
/// ValidationError("<source>:<line>: <message>").
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

struct PresetInfo {
  std::string name;
  std::string description;
};
std::vector<PresetInfo> list_presets();
/// YAML text of a preset; ValidationError for an unknown name.
std::string preset_yaml(std::string_view name);
ExperimentConfig preset(std::string_view name);

/// Iterations each method runs under `config` (comparison mode aware).
long iterations_for(const ExperimentConfig& config, Method method);
/// Step used for `method` on `instance` under `config`.
double step_for(const ExperimentConfig& config, const catalog::Instance& instance, Method method);

// Distributed runs.

struct NetworkRunOptions {
  Method method = Method::OGDA;
  double alpha = 0.0;
  long max_iters = 1000;
  double stop_tol = 1e-10;
  int record_every = 1;
  /// Evaluate the ergodic certificate at every iteration (needs the reference).
  bool check_rate = false;
  std::ostream* csv = nullptr;
};

struct NetworkRunResult {
  Method method = Method::OGDA;
  double alpha = 0.0;
  long iterations = 0;
  long grad_calls = 0;  ///< per agent
  bool converged = false;
  double vi_residual = 0.0;
  /// Consensus: max_i ||x_i - s*||_inf. Allocation: ||y - y*||_inf.
  double primal_error = 0.0;
  /// Consensus residual ||(L kron I) x|| or feasibility gap.
  double constraint_residual = 0.0;
  double objective = 0.0;
  double dual_spread = 0.0;  ///< allocation only
  /// |L(ergodic) - L*| <= ||w0 - w*||^2 / (2 alpha T), as stated for the networks.
  RateReport rate;
  /// L(x_hat, v*) - L(x*, v_hat) against the same bound.
  RateReport gap_rate;
  Vector final_stacked;
  double wall_seconds = 0.0;
};

NetworkRunResult run_consensus(const catalog::ConsensusInstance& instance, const NetworkRunOptions& options);
NetworkRunResult run_allocation(const catalog::AllocationInstance& instance, const NetworkRunOptions& options);

// Commands.

struct RunSummary {
  Method method = Method::OGDA;
  double alpha = 0.0;
  long iterations = 0;
  long grad_calls = 0;
  bool converged = false;
  bool diverged = false;
  double final_residual = 0.0;
  /// |f(z_T) - f*| for saddle instances; constraint residual for networks.
  std::optional<double> final_gap;
  std::optional<double> primal_error;
  std::optional<double> dual_spread;
  double wall_seconds = 0.0;
  std::string csv_file;
  std::string message;
};

struct SolveResult {
  int exit_code = kExitOk;
  std::vector<RunSummary> runs;
  std::vector<std::string> notes;
};

/// Runs every configured method, writing <method>.csv, summary.yaml and
/// reference.yaml to config.out_dir.
SolveResult cmd_solve(const ExperimentConfig& config);

struct CheckResult {
  std::string name;
  bool passed = false;
  /// Signed distance to the threshold (>= 0 when passing).
  double margin = 0.0;
  std::string detail;
};

struct VerifyReport {
  std::string instance;
  std::vector<CheckResult> checks;
  bool passed() const;
};

/// Runs the invariant suite on the configured instance and writes verify.yaml.
VerifyReport cmd_verify(const ExperimentConfig& config);
VerifyReport verify_instance(const catalog::Instance& instance, const ExperimentConfig& config);

/// Serializes to YAML text.
std::string report_yaml(const VerifyReport& report);
std::string summary_yaml(const ExperimentConfig& config, const catalog::Instance& instance, const SolveResult& result);
std::string reference_yaml(const catalog::Instance& instance);

/// Maps an exception from the library to the CLI exit code.
int exit_code_for(const std::exception& e);

}  // namespace saddlenet::harness
