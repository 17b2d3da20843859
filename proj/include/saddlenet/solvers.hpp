#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "saddlenet/common.hpp"
#include "saddlenet/saddle.hpp"

namespace saddlenet {

enum class Method { GDA, OGDA, EG };

std::string to_string(Method m);
/// Case-insensitive; throws ValidationError on an unknown name.
Method parse_method(std::string_view name);

/// Largest admissible step: 1/(2 kappa) for OGDA (and GDA), 1/kappa for EG.
double step_bound(Method m, double kappa);

struct SolverConfig {
  Method method = Method::OGDA;
  /// 0 selects 0.9 * step_bound(method, kappa).
  double step_size = 0.0;
  int max_iters = 1000;
  /// Stop once vi_residual(z_k) <= stop_tol. 0 disables early stopping.
  double stop_tol = 1e-10;
  int record_every = 1;
  /// Accept a step size above the safe bound (used for negative controls).
  bool allow_unsafe_step = false;
};

/// Validates `config` against kappa and returns the step size to use.
double resolve_step_size(const SolverConfig& config, double kappa);

// Single projected steps on the stacked iterate.

/// z+ = P(z - alpha F(z)).
Vector step_gda(const SaddleProblem& problem, const Vector& z, double alpha);
/// z+ = P(z - 2 alpha F(z) + alpha F(z_prev)). Pass z_prev = z on the first step.
Vector step_ogda(const SaddleProblem& problem, const Vector& z, const Vector& z_prev, double alpha);

struct ExtragradientStep {
  Vector mid;   ///< z_{k+1/2} = P(z_k - alpha F(z_k))
  Vector next;  ///< z_{k+1}   = P(z_k - alpha F(z_{k+1/2}))
};
ExtragradientStep step_eg(const SaddleProblem& problem, const Vector& z, double alpha);

/// A known saddle point, used for distances and rate certificates.
struct Reference {
  Vector z;
  double f = 0.0;  ///< f(z*)
};
Reference make_reference(const SaddleProblem& problem, Vector z_star);

struct TraceRecord {
  int iter = 0;
  Vector z;
  /// EG only: the mid-point z_{k-1/2} that produced z_k (absent at k = 0).
  std::optional<Vector> z_half;
  /// Running ergodic average after `iter` steps (empty at k = 0).
  Vector ergodic;
  double f_value = 0.0;
  double vi_residual = 0.0;
  /// ||z_k - z_{k-1}|| (absent at k = 0).
  std::optional<double> step_norm;
  std::optional<double> dist_to_ref;
  /// |f(ergodic) - f*| (needs a reference and k >= 1).
  std::optional<double> ergodic_gap;
  /// f(x_hat, y*) - f(x*, y_hat) at the ergodic average.
  std::optional<double> saddle_gap;
  /// ||z_0 - z*||^2 / (2 alpha k).
  std::optional<double> rate_bound;
  /// OGDA descent quantity Delta_k (needs a reference).
  std::optional<double> delta_k;
  long grad_calls = 0;
};

struct RunTrace {
  Method method = Method::OGDA;
  double alpha = 0.0;
  double kappa = 0.0;
  int iterations = 0;
  long grad_calls = 0;
  bool converged = false;
  double final_residual = 0.0;
  Vector final_z;
  std::optional<Reference> reference;
  std::vector<TraceRecord> records;
};

using TraceSink = std::function<void(const TraceRecord&)>;

/// Iterative driver. Keeps only the last two iterates and their operator
/// values; F evaluations consumed by the method are counted in grad_calls
/// (GDA and OGDA: one per iteration, EG: two).
class SaddleSolver {
 public:
  SaddleSolver(const SaddleProblem& problem, Method method, double alpha, Vector z0);

  /// Performs one iteration. Throws DivergenceError on blow-up.
  void advance();

  int iteration() const { return k_; }
  const Vector& z() const { return z_; }
  const Vector& z_prev() const { return z_prev_; }
  const std::optional<Vector>& z_half() const { return z_half_; }
  long grad_calls() const { return grad_calls_; }
  double alpha() const { return alpha_; }
  Method method() const { return method_; }

  /// F(z_k), cached; not charged to grad_calls until a step consumes it.
  const Vector& current_operator();
  /// F(z_{k-1}) as used by the last OGDA step (F(z_0) at k = 0).
  const Vector& previous_operator() const { return f_prev_; }

  double vi_residual();

 private:
  const Vector& charge_current();

  const SaddleProblem& problem_;
  ConvexSet lambda_;
  Method method_;
  double alpha_;
  int k_ = 0;
  Vector z_;
  Vector z_prev_;
  std::optional<Vector> z_half_;
  Vector f_cur_;
  bool f_cur_valid_ = false;
  bool f_cur_charged_ = false;
  Vector f_prev_;
  long grad_calls_ = 0;
};

/// Runs `config.max_iters` steps (or until vi_residual <= stop_tol) from z0,
/// streaming every `record_every`-th record (and the last) to `sink`.
/// Returns the trace header; `records` is left empty.
RunTrace run(const SaddleProblem& problem, const SolverConfig& config, const Vector& z0,
             const std::optional<Reference>& reference, const TraceSink& sink);

/// As above, collecting every emitted record into the returned trace.
RunTrace run(const SaddleProblem& problem, const SolverConfig& config, const Vector& z0,
             const std::optional<Reference>& reference = std::nullopt);

/// eta = 1/(2 alpha) - kappa.
double delta_eta(double alpha, double kappa);

/// Delta_k = ||z_k - z*||^2/(2 alpha) + (kappa/2)||z_k - z_{k-1}||^2
///           - (z_k - z*)^T (F(z_k) - F(z_{k-1})), with z_{-1} = z_0.
/// This is the quantity whose one-step inequality the OGDA analysis derives
/// (it is bounded below by (1/(2 alpha) - kappa/2)||z_k - z*||^2).
/// Requires an OGDA trace recorded at every iteration; throws ContractError
/// when consecutive iterates are missing.
std::vector<double> delta_diagnostic(const SaddleProblem& problem, const RunTrace& trace, const Vector& z_star,
                                     double alpha);

struct DescentReport {
  bool passed = true;
  std::optional<int> first_violation;
  /// min over k of rhs - lhs (>= 0 when every step satisfies the inequality).
  double worst_margin = 0.0;
  int steps_checked = 0;
};

/// Checks Delta_{k+1} <= Delta_k - eta ||z_{k+1} - z_k||^2 + slack along a trace.
DescentReport check_delta_descent(const SaddleProblem& problem, const RunTrace& trace, const Vector& z_star,
                                  double alpha, double slack = 1e-10);

/// rho = (1 - alpha^2 kappa^2) / (2 alpha).
double eg_rho(double alpha, double kappa);

/// Checks ||z_{k+1} - z*||^2 <= ||z_k - z*||^2 - 2 alpha rho ||z_{k+1} - z_{k+1/2}||^2 + slack
/// along an EG trace recorded at every iteration.
DescentReport eg_contraction_check(const RunTrace& trace, const Vector& z_star, double alpha, double kappa,
                                   double slack = 1e-10);

struct RateReport {
  bool passed = true;
  std::optional<int> first_violation;
  double worst_margin = 0.0;  ///< min over T of bound - gap
  int checked = 0;
};

/// |f(ergodic_T) - f*| <= ||z0 - z*||^2 / (2 alpha T) + slack for every record with T >= 1.
RateReport check_ergodic_rate(const RunTrace& trace, double slack = 1e-10);
/// f(x_hat_T, y*) - f(x*, y_hat_T) <= ||z0 - z*||^2 / (2 alpha T) + slack for every record with T >= 1.
RateReport check_saddle_gap(const RunTrace& trace, double slack = 1e-10);

}  // namespace saddlenet
