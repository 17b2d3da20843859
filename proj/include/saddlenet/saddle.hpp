#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "saddlenet/common.hpp"
#include "saddlenet/sets.hpp"

namespace saddlenet {

/// Blockwise Lipschitz constants of the partial gradients.
/// l_xy: Lipschitz constant of grad_x f in y, and so on.
struct LipschitzConstants {
  double l_xx = 0.0;
  double l_xy = 0.0;
  double l_yx = 0.0;
  double l_yy = 0.0;

  /// kappa_m = 2 max(l_xx, l_xy, l_yx, l_yy).
  double kappa() const;
};

using ValueFn = std::function<double(const Vector& x, const Vector& y)>;
using GradFn = std::function<Vector(const Vector& x, const Vector& y)>;

/// min over x in set_x, max over y in set_y of f(x, y), with f convex-concave.
///
/// The oracles must be pure; the library evaluates them concurrently during
/// sampled checks.
struct SaddleProblem {
  std::string name;
  Eigen::Index dim_x = 0;
  Eigen::Index dim_y = 0;
  ConvexSet set_x = ConvexSet::whole_space(0);
  ConvexSet set_y = ConvexSet::whole_space(0);
  ValueFn value;
  GradFn grad_x;
  GradFn grad_y;
  LipschitzConstants lipschitz;
  /// Replaces 2 max(l) when the problem knows a Lipschitz bound for F directly
  /// (the networked problems declare kappa_c / kappa_s this way).
  std::optional<double> kappa_override;

  double kappa() const { return kappa_override ? *kappa_override : lipschitz.kappa(); }
  Eigen::Index dim() const { return dim_x + dim_y; }
  /// Lambda = X x Y.
  ConvexSet feasible_set() const { return ConvexSet::product({set_x, set_y}); }

  /// Throws ContractError on missing oracles or mismatched set dimensions.
  void validate() const;
};

/// Stacked primal-dual point z = col(x, y).
struct IterateZ {
  Vector x;
  Vector y;

  Vector stacked() const;
  static IterateZ split(const SaddleProblem& problem, const Vector& z);
};

double objective(const SaddleProblem& problem, const Vector& z);

/// F(z) = col(grad_x f(x, y), -grad_y f(x, y)) on the stacked vector.
Vector operator_F(const SaddleProblem& problem, const Vector& z);
inline Vector operator_F(const SaddleProblem& problem, const IterateZ& z) { return operator_F(problem, z.stacked()); }

/// Natural-map residual ||z - P(z - F(z))||; zero exactly at VI solutions.
double vi_residual(const SaddleProblem& problem, const Vector& z);

struct MonotoneReport {
  int samples = 0;
  double min_inner = 0.0;  ///< min over pairs of (F(z1) - F(z2))^T (z1 - z2)
  Vector witness_a;
  Vector witness_b;
  bool passed = false;
};

/// Sampled monotonicity of F over Lambda. Pass iff every inner product >= -1e-10.
MonotoneReport check_monotone(const SaddleProblem& problem, int samples, std::uint64_t seed);

struct LipschitzReport {
  int samples = 0;
  double max_ratio = 0.0;  ///< max ||F(z1) - F(z2)|| / ||z1 - z2||
  double declared = 0.0;
  Vector witness_a;
  Vector witness_b;
  bool passed = false;  ///< max_ratio <= declared (1 + 1e-8)
};

LipschitzReport sample_lipschitz(const SaddleProblem& problem, int samples, std::uint64_t seed);

/// Max sampled Lipschitz ratio of F. Throws ValidationError, naming the
/// witnessing pair, when the declared kappa is exceeded.
double estimate_kappa(const SaddleProblem& problem, int samples, std::uint64_t seed);

struct ConvexityReport {
  int samples = 0;
  double worst_violation = 0.0;  ///< largest midpoint-inequality violation observed
  bool passed = false;
};

/// Midpoint checks: f(mid x, y) <= avg f(x, y) and f(x, mid y) >= avg f(x, y).
ConvexityReport check_convex_concave(const SaddleProblem& problem, int samples, std::uint64_t seed,
                                     double tol = 1e-9);

/// Max relative error of grad_x / grad_y against central differences of
/// value at sampled points of Lambda (step 1e-6 (1 + ||z||)).
double gradient_error(const SaddleProblem& problem, int samples, std::uint64_t seed);

}  // namespace saddlenet
