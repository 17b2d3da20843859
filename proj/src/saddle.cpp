#include "saddlenet/saddle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "saddlenet/rng.hpp"

namespace saddlenet {

namespace {

constexpr double kMonotoneTol = 1e-10;
constexpr double kLipschitzSlack = 1e-8;

std::string format_vector(const Vector& v) {
  std::ostringstream os;
  os.precision(6);
  os << '(';
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ')';
  return os.str();
}

}  // namespace

double LipschitzConstants::kappa() const { return 2.0 * std::max({l_xx, l_xy, l_yx, l_yy}); }

void SaddleProblem::validate() const {
  require(static_cast<bool>(value) && static_cast<bool>(grad_x) && static_cast<bool>(grad_y),
          "saddle problem '" + name + "': missing oracle");
  require(set_x.dim() == dim_x, "saddle problem '" + name + "': set_x dimension mismatch");
  require(set_y.dim() == dim_y, "saddle problem '" + name + "': set_y dimension mismatch");
  require(lipschitz.l_xx >= 0 && lipschitz.l_xy >= 0 && lipschitz.l_yx >= 0 && lipschitz.l_yy >= 0,
          "saddle problem '" + name + "': negative Lipschitz constant");
}

Vector IterateZ::stacked() const {
  Vector z(x.size() + y.size());
  z << x, y;
  return z;
}

IterateZ IterateZ::split(const SaddleProblem& problem, const Vector& z) {
  require(z.size() == problem.dim(), "IterateZ::split: dimension mismatch");
  return {z.head(problem.dim_x), z.tail(problem.dim_y)};
}

double objective(const SaddleProblem& problem, const Vector& z) {
  require(z.size() == problem.dim(), "objective: dimension mismatch");
  return problem.value(z.head(problem.dim_x), z.tail(problem.dim_y));
}

Vector operator_F(const SaddleProblem& problem, const Vector& z) {
  require(z.size() == problem.dim(), "operator_F: dimension mismatch");
  const Vector x = z.head(problem.dim_x);
  const Vector y = z.tail(problem.dim_y);
  Vector out(z.size());
  out.head(problem.dim_x) = problem.grad_x(x, y);
  out.tail(problem.dim_y) = -problem.grad_y(x, y);
  return out;
}

double vi_residual(const SaddleProblem& problem, const Vector& z) {
  const Vector step = z - operator_F(problem, z);
  return (z - problem.feasible_set().project(step)).norm();
}

MonotoneReport check_monotone(const SaddleProblem& problem, int samples, std::uint64_t seed) {
  require(samples >= 1, "check_monotone: samples must be >= 1");
  const ConvexSet lambda = problem.feasible_set();
  Rng rng(seed);
  MonotoneReport report;
  report.samples = samples;
  report.min_inner = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    const Vector a = lambda.sample(rng);
    const Vector b = lambda.sample(rng);
    const double inner = (operator_F(problem, a) - operator_F(problem, b)).dot(a - b);
    if (inner < report.min_inner) {
      report.min_inner = inner;
      report.witness_a = a;
      report.witness_b = b;
    }
  }
  report.passed = report.min_inner >= -kMonotoneTol;
  return report;
}

LipschitzReport sample_lipschitz(const SaddleProblem& problem, int samples, std::uint64_t seed) {
  require(samples >= 2, "estimate_kappa: samples must be >= 2");
  const ConvexSet lambda = problem.feasible_set();
  Rng rng(seed);
  LipschitzReport report;
  report.samples = samples;
  report.declared = problem.kappa();
  for (int s = 0; s < samples; ++s) {
    const Vector a = lambda.sample(rng);
    const Vector b = lambda.sample(rng);
    const double dz = (a - b).norm();
    if (dz == 0.0) continue;
    const double ratio = (operator_F(problem, a) - operator_F(problem, b)).norm() / dz;
    if (ratio > report.max_ratio) {
      report.max_ratio = ratio;
      report.witness_a = a;
      report.witness_b = b;
    }
  }
  report.passed = report.max_ratio <= report.declared * (1.0 + kLipschitzSlack);
  return report;
}

double estimate_kappa(const SaddleProblem& problem, int samples, std::uint64_t seed) {
  const LipschitzReport report = sample_lipschitz(problem, samples, seed);
  if (!report.passed) {
    std::ostringstream os;
    os << "problem '" << problem.name << "': sampled Lipschitz ratio " << report.max_ratio
       << " exceeds declared kappa " << report.declared << " at z1 = " << format_vector(report.witness_a)
       << ", z2 = " << format_vector(report.witness_b);
    throw ValidationError(os.str());
  }
  return report.max_ratio;
}

ConvexityReport check_convex_concave(const SaddleProblem& problem, int samples, std::uint64_t seed, double tol) {
  require(samples >= 1, "check_convex_concave: samples must be >= 1");
  Rng rng(seed);
  ConvexityReport report;
  report.samples = samples;
  for (int s = 0; s < samples; ++s) {
    const Vector x1 = problem.set_x.sample(rng), x2 = problem.set_x.sample(rng);
    const Vector y1 = problem.set_y.sample(rng), y2 = problem.set_y.sample(rng);
    // Convex in x at fixed y1.
    const double fx = 0.5 * (problem.value(x1, y1) + problem.value(x2, y1));
    const double fxm = problem.value(0.5 * (x1 + x2), y1);
    report.worst_violation = std::max(report.worst_violation, (fxm - fx) / (1.0 + std::abs(fx)));
    // Concave in y at fixed x1.
    const double fy = 0.5 * (problem.value(x1, y1) + problem.value(x1, y2));
    const double fym = problem.value(x1, 0.5 * (y1 + y2));
    report.worst_violation = std::max(report.worst_violation, (fy - fym) / (1.0 + std::abs(fy)));
  }
  report.passed = report.worst_violation <= tol;
  return report;
}

double gradient_error(const SaddleProblem& problem, int samples, std::uint64_t seed) {
  require(samples >= 1, "gradient_error: samples must be >= 1");
  const ConvexSet lambda = problem.feasible_set();
  Rng rng(seed);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Vector z = lambda.sample(rng);
    const double h = 1e-6 * (1.0 + z.norm());
    Vector grad(z.size());
    grad.head(problem.dim_x) = problem.grad_x(z.head(problem.dim_x), z.tail(problem.dim_y));
    grad.tail(problem.dim_y) = problem.grad_y(z.head(problem.dim_x), z.tail(problem.dim_y));
    Vector fd(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      Vector zp = z, zm = z;
      zp[i] += h;
      zm[i] -= h;
      fd[i] = (objective(problem, zp) - objective(problem, zm)) / (2.0 * h);
    }
    worst = std::max(worst, (fd - grad).norm() / std::max(1.0, grad.norm()));
  }
  return worst;
}

}  // namespace saddlenet
