#pragma once

#include <functional>
#include <vector>

#include "saddlenet/allocation.hpp"
#include "saddlenet/common.hpp"
#include "saddlenet/consensus.hpp"

// Reference solvers used as ground truth for the iterative methods. Nothing
// here calls into the solver module; the only shared pieces are the problem
// descriptions and the set projections.

namespace saddlenet::oracle {

struct KKTReference {
  Vector y_star;
  Vector mu;  ///< multiplier of the coupling constraint (size m)
  double objective = 0.0;
  struct Residuals {
    double feasibility = 0.0;  ///< ||sum(W_i y_i* - d_i)||
    double stationarity = 0.0; ///< max_i [phi_i(y_i*) - min phi_i], phi_i = h_i + mu W_i y over the box
  } residuals;
  int widenings = 0;
};

/// Dual bisection for scalar coupling (m = 1), scalar decisions (q_i = 1) and
/// box sets. Throws ValidationError when the problem is infeasible (the gap
/// never changes sign over the widened bracket) and ContractError for
/// unsupported structure.
KKTReference solve_allocation_kkt(const AllocationProblem& problem);

/// Minimizer of sum f_i over the intersection of the (box) sets. For m = 1:
/// golden-section search polished by derivative bisection; otherwise projected
/// gradient with step 1/sum(l_i), at most 1e7 iterations. Certified through
/// normal_cone_residual >= -1e-8 (InvariantError otherwise).
Vector solve_consensus_reference(const ConsensusProblem& problem);

/// Intersection of the agents' sets as a box (sets must be boxes or whole spaces).
ConvexSet consensus_feasible_box(const ConsensusProblem& problem);

/// Full saddle point (x*, v*) of L1: x* = 1 kron s*, and v* the zero-mean
/// solution of (L kron I) v = -grad f(x*) when s* is interior to every set.
/// Otherwise v* is the limit of a long tight-tolerance run started from
/// (x*, 0). Certified by vi_residual <= 1e-8.
Vector consensus_saddle_reference(const ConsensusProblem& problem, const Vector& s_star);

/// Full saddle point (y*, a*, lambda*) of L2 from the KKT reference:
/// lambda_i* = mu, a* the zero-mean solution of (L kron I) a = W y* - d.
/// Certified by vi_residual <= 1e-8.
Vector allocation_saddle_reference(const AllocationProblem& problem, const KKTReference& kkt);

/// Zero-mean solution u of (L kron I_m) u = r, for r with zero block sum.
Vector solve_laplacian(const NetworkGraph& graph, int m, const Vector& r);

struct FiniteDiffReport {
  double max_rel_error = 0.0;
  std::size_t worst_point = 0;
  bool passed = false;
};

/// Central differences with step 1e-6 (1 + ||p||); relative error
/// ||fd - grad|| / max(1, ||grad||). Pass iff the max error <= tol.
FiniteDiffReport finite_diff_check(const std::function<double(const Vector&)>& f,
                                   const std::function<Vector(const Vector&)>& grad, const std::vector<Vector>& points,
                                   double tol);

}  // namespace saddlenet::oracle
