#include "saddlenet/solvers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace saddlenet {

namespace {

constexpr double kDivergenceNorm = 1e12;

void check_consecutive(const RunTrace& trace, const char* who) {
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    if (trace.records[i].iter != static_cast<int>(i)) {
      throw ContractError(std::string(who) + ": trace is missing consecutive iterates (record " + std::to_string(i) +
                          " has iter " + std::to_string(trace.records[i].iter) + ")");
    }
  }
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::GDA:
      return "GDA";
    case Method::OGDA:
      return "OGDA";
    case Method::EG:
      return "EG";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string up(name);
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
  if (up == "GDA") return Method::GDA;
  if (up == "OGDA") return Method::OGDA;
  if (up == "EG") return Method::EG;
  throw ValidationError("unknown method '" + std::string(name) + "' (expected GDA, OGDA or EG)");
}

double step_bound(Method m, double kappa) {
  if (!(kappa > 0.0)) return std::numeric_limits<double>::infinity();
  return m == Method::EG ? 1.0 / kappa : 1.0 / (2.0 * kappa);
}

double resolve_step_size(const SolverConfig& config, double kappa) {
  if (config.max_iters < 0) throw ValidationError("max_iters must be >= 0");
  if (config.record_every < 1) throw ValidationError("record_every must be >= 1");
  if (!(config.stop_tol >= 0.0)) throw ValidationError("stop_tol must be >= 0");
  const double bound = step_bound(config.method, kappa);
  if (config.step_size == 0.0) {
    if (!std::isfinite(bound)) throw ValidationError("step size required: operator has kappa = 0");
    return 0.9 * bound;
  }
  if (!(config.step_size > 0.0) || !std::isfinite(config.step_size)) {
    throw ValidationError("step size must be positive and finite");
  }
  if (config.step_size >= bound && !config.allow_unsafe_step) {
    std::ostringstream os;
    os << to_string(config.method) << " step size " << config.step_size << " violates the bound " << bound
       << " (kappa = " << kappa << ")";
    throw ValidationError(os.str());
  }
  return config.step_size;
}

Vector step_gda(const SaddleProblem& problem, const Vector& z, double alpha) {
  return problem.feasible_set().project(z - alpha * operator_F(problem, z));
}

Vector step_ogda(const SaddleProblem& problem, const Vector& z, const Vector& z_prev, double alpha) {
  const Vector f = operator_F(problem, z);
  const Vector f_prev = operator_F(problem, z_prev);
  return problem.feasible_set().project(z - 2.0 * alpha * f + alpha * f_prev);
}

ExtragradientStep step_eg(const SaddleProblem& problem, const Vector& z, double alpha) {
  const ConvexSet lambda = problem.feasible_set();
  ExtragradientStep out;
  out.mid = lambda.project(z - alpha * operator_F(problem, z));
  out.next = lambda.project(z - alpha * operator_F(problem, out.mid));
  return out;
}

Reference make_reference(const SaddleProblem& problem, Vector z_star) {
  const double f = objective(problem, z_star);
  return {std::move(z_star), f};
}

SaddleSolver::SaddleSolver(const SaddleProblem& problem, Method method, double alpha, Vector z0)
    : problem_(problem), lambda_(problem.feasible_set()), method_(method), alpha_(alpha), z_(z0), z_prev_(z0) {
  require(z_.size() == problem.dim(), "SaddleSolver: initial point dimension mismatch");
  require(alpha > 0.0, "SaddleSolver: step size must be positive");
}

const Vector& SaddleSolver::current_operator() {
  if (!f_cur_valid_) {
    f_cur_ = operator_F(problem_, z_);
    f_cur_valid_ = true;
    f_cur_charged_ = false;
  }
  return f_cur_;
}

const Vector& SaddleSolver::charge_current() {
  current_operator();
  if (!f_cur_charged_) {
    ++grad_calls_;
    f_cur_charged_ = true;
  }
  return f_cur_;
}

double SaddleSolver::vi_residual() {
  const Vector& f = current_operator();
  return (z_ - lambda_.project(z_ - f)).norm();
}

void SaddleSolver::advance() {
  const Vector f = charge_current();
  Vector next;
  switch (method_) {
    case Method::GDA:
      next = lambda_.project(z_ - alpha_ * f);
      break;
    case Method::OGDA: {
      const Vector& f_prev = k_ == 0 ? f : f_prev_;
      next = lambda_.project(z_ - 2.0 * alpha_ * f + alpha_ * f_prev);
      break;
    }
    case Method::EG: {
      Vector mid = lambda_.project(z_ - alpha_ * f);
      const Vector f_mid = operator_F(problem_, mid);
      ++grad_calls_;
      next = lambda_.project(z_ - alpha_ * f_mid);
      z_half_ = std::move(mid);
      break;
    }
  }
  f_prev_ = f;
  z_prev_ = std::move(z_);
  z_ = std::move(next);
  f_cur_valid_ = false;
  ++k_;
  if (!z_.allFinite() || z_.norm() > kDivergenceNorm) {
    std::ostringstream os;
    os << to_string(method_) << " diverged at iteration " << k_ << ": ||z|| = " << z_.norm();
    throw DivergenceError(os.str());
  }
}

RunTrace run(const SaddleProblem& problem, const SolverConfig& config, const Vector& z0,
             const std::optional<Reference>& reference, const TraceSink& sink) {
  problem.validate();
  require(z0.size() == problem.dim(), "run: initial point dimension mismatch");
  if (reference) require(reference->z.size() == problem.dim(), "run: reference dimension mismatch");

  RunTrace trace;
  trace.method = config.method;
  trace.kappa = problem.kappa();
  trace.alpha = resolve_step_size(config, trace.kappa);
  trace.reference = reference;
  const double alpha = trace.alpha;

  SaddleSolver solver(problem, config.method, alpha, z0);
  Vector ergodic_sum = Vector::Zero(z0.size());
  const double dist0_sq = reference ? (z0 - reference->z).squaredNorm() : 0.0;
  const IterateZ ref_split = reference ? IterateZ::split(problem, reference->z) : IterateZ{};

  auto make_record = [&](double residual) {
    TraceRecord r;
    const int k = solver.iteration();
    r.iter = k;
    r.z = solver.z();
    r.f_value = objective(problem, r.z);
    r.vi_residual = residual;
    r.grad_calls = solver.grad_calls();
    if (k > 0) {
      r.step_norm = (solver.z() - solver.z_prev()).norm();
      r.ergodic = ergodic_sum / static_cast<double>(k);
      if (config.method == Method::EG) r.z_half = solver.z_half();
    }
    if (reference) {
      r.dist_to_ref = (r.z - reference->z).norm();
      if (k > 0) {
        r.ergodic_gap = std::abs(objective(problem, r.ergodic) - reference->f);
        const IterateZ avg = IterateZ::split(problem, r.ergodic);
        r.saddle_gap = problem.value(avg.x, ref_split.y) - problem.value(ref_split.x, avg.y);
        r.rate_bound = dist0_sq / (2.0 * alpha * k);
      }
      if (config.method == Method::OGDA) {
        const Vector& f = solver.current_operator();
        const Vector& f_prev = k == 0 ? f : solver.previous_operator();
        const Vector dz = r.z - reference->z;
        r.delta_k = dz.squaredNorm() / (2.0 * alpha) +
                    0.5 * trace.kappa * (r.z - solver.z_prev()).squaredNorm() - dz.dot(f - f_prev);
      }
    }
    return r;
  };

  double residual = solver.vi_residual();
  // stop_tol == 0 means run all max_iters steps, even past an exact fixed point.
  const bool stopping = config.stop_tol > 0.0;
  bool converged = stopping && residual <= config.stop_tol;
  sink(make_record(residual));

  while (!converged && solver.iteration() < config.max_iters) {
    solver.advance();
    if (config.method == Method::EG) {
      ergodic_sum += *solver.z_half();
    } else {
      ergodic_sum += solver.z();
    }
    residual = solver.vi_residual();
    converged = stopping && residual <= config.stop_tol;
    const int k = solver.iteration();
    if (converged || k == config.max_iters || k % config.record_every == 0) sink(make_record(residual));
  }

  trace.iterations = solver.iteration();
  trace.grad_calls = solver.grad_calls();
  trace.converged = converged;
  trace.final_residual = residual;
  trace.final_z = solver.z();
  return trace;
}

RunTrace run(const SaddleProblem& problem, const SolverConfig& config, const Vector& z0,
             const std::optional<Reference>& reference) {
  std::vector<TraceRecord> records;
  RunTrace trace = run(problem, config, z0, reference, [&](const TraceRecord& r) { records.push_back(r); });
  trace.records = std::move(records);
  return trace;
}

double delta_eta(double alpha, double kappa) { return 1.0 / (2.0 * alpha) - kappa; }

std::vector<double> delta_diagnostic(const SaddleProblem& problem, const RunTrace& trace, const Vector& z_star,
                                     double alpha) {
  check_consecutive(trace, "delta_diagnostic");
  const double kappa = problem.kappa();
  std::vector<double> out;
  out.reserve(trace.records.size());
  Vector f_prev;
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    const Vector& z = trace.records[k].z;
    const Vector& z_prev = k == 0 ? z : trace.records[k - 1].z;
    const Vector f = operator_F(problem, z);
    if (k == 0) f_prev = f;
    const Vector dz = z - z_star;
    out.push_back(dz.squaredNorm() / (2.0 * alpha) + 0.5 * kappa * (z - z_prev).squaredNorm() -
                  dz.dot(f - f_prev));
    f_prev = f;
  }
  return out;
}

DescentReport check_delta_descent(const SaddleProblem& problem, const RunTrace& trace, const Vector& z_star,
                                  double alpha, double slack) {
  const std::vector<double> delta = delta_diagnostic(problem, trace, z_star, alpha);
  const double eta = delta_eta(alpha, problem.kappa());
  DescentReport report;
  report.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < delta.size(); ++k) {
    const double step_sq = (trace.records[k + 1].z - trace.records[k].z).squaredNorm();
    const double margin = delta[k] - eta * step_sq - delta[k + 1];
    report.worst_margin = std::min(report.worst_margin, margin);
    ++report.steps_checked;
    if (margin < -slack && report.passed) {
      report.passed = false;
      report.first_violation = static_cast<int>(k);
    }
  }
  if (report.steps_checked == 0) report.worst_margin = 0.0;
  return report;
}

double eg_rho(double alpha, double kappa) { return (1.0 - alpha * alpha * kappa * kappa) / (2.0 * alpha); }

DescentReport eg_contraction_check(const RunTrace& trace, const Vector& z_star, double alpha, double kappa,
                                   double slack) {
  check_consecutive(trace, "eg_contraction_check");
  const double rho = eg_rho(alpha, kappa);
  DescentReport report;
  report.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < trace.records.size(); ++k) {
    const auto& next = trace.records[k + 1];
    if (!next.z_half) throw ContractError("eg_contraction_check: record " + std::to_string(k + 1) + " has no mid-point");
    const double lhs = (next.z - z_star).squaredNorm();
    const double rhs = (trace.records[k].z - z_star).squaredNorm() - 2.0 * alpha * rho * (next.z - *next.z_half).squaredNorm();
    const double margin = rhs - lhs;
    report.worst_margin = std::min(report.worst_margin, margin);
    ++report.steps_checked;
    if (margin < -slack && report.passed) {
      report.passed = false;
      report.first_violation = static_cast<int>(k);
    }
  }
  if (report.steps_checked == 0) report.worst_margin = 0.0;
  return report;
}

namespace {

RateReport rate_check(const RunTrace& trace, double slack, std::optional<double> TraceRecord::*gap) {
  RateReport report;
  report.worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& r : trace.records) {
    if (!(r.*gap) || !r.rate_bound) continue;
    const double margin = *r.rate_bound - *(r.*gap);
    report.worst_margin = std::min(report.worst_margin, margin);
    ++report.checked;
    if (margin < -slack && report.passed) {
      report.passed = false;
      report.first_violation = r.iter;
    }
  }
  if (report.checked == 0) report.worst_margin = 0.0;
  return report;
}

}  // namespace

RateReport check_ergodic_rate(const RunTrace& trace, double slack) {
  return rate_check(trace, slack, &TraceRecord::ergodic_gap);
}

RateReport check_saddle_gap(const RunTrace& trace, double slack) {
  return rate_check(trace, slack, &TraceRecord::saddle_gap);
}

}  // namespace saddlenet
