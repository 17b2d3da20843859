#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "saddlenet/common.hpp"
#include "saddlenet/exchange.hpp"
#include "saddlenet/graph.hpp"
#include "saddlenet/saddle.hpp"
#include "saddlenet/sets.hpp"
#include "saddlenet/solvers.hpp"

namespace saddlenet {

/// Private data of one agent in the consensus problem.
struct ConsensusAgent {
  std::function<double(const Vector&)> objective;
  std::function<Vector(const Vector&)> gradient;
  ConvexSet set = ConvexSet::whole_space(0);  ///< Omega_i
  double lipschitz = 0.0;                     ///< Lipschitz constant of the gradient
};

/// min sum_i f_i(x_i) over x_i in Omega_i subject to (L kron I_m) x = 0.
struct ConsensusProblem {
  NetworkGraph graph;
  int m = 1;
  std::vector<ConsensusAgent> agents;
  /// l_f + 2 lambda_max(L), l_f = max_i l_i.
  double kappa_c = 0.0;

  int size() const { return graph.size(); }
  Eigen::Index stacked_dim() const { return static_cast<Eigen::Index>(size()) * m; }
};

/// Validates dimensions and computes kappa_c.
ConsensusProblem make_consensus_problem(NetworkGraph graph, int m, std::vector<ConsensusAgent> agents);

double objective_sum(const ConsensusProblem& problem, const Vector& x);

/// L1(x, v) = sum f_i(x_i) + v^T (L kron I) x + 1/2 x^T (L kron I) x.
double lagrangian_L1(const ConsensusProblem& problem, const Vector& x, const Vector& v);

/// Phi(x, v) = [grad f(x) + (L kron I)(x + v); -(L kron I) x], by neighbor sums.
Vector operator_phi(const ConsensusProblem& problem, const Vector& x, const Vector& v);

/// ||(L kron I) x||.
double consensus_residual(const ConsensusProblem& problem, const Vector& x);

/// Centralized form: x-block Omega, y-block v in R^{Nm}, value L1. The
/// gradients use a sparse assembled L kron I_m, independent of the
/// neighbor-sum code in operator_phi. kappa_override = kappa_c.
SaddleProblem consensus_saddle_problem(const ConsensusProblem& problem);

struct ConsensusMessage {
  Vector x;
  Vector v;
};

struct ConsensusAgentState {
  Vector x;
  Vector v;
  Vector x_prev;     ///< x_i^{k-1}
  Vector v_prev;     ///< v_i^{k-1}
  Vector grad_prev;  ///< grad f_i(x_i^{k-1})
  /// Neighbor values received last round, aligned with graph.neighbors(i).
  std::vector<ConsensusMessage> neighbor_prev;
  /// EG mid-point of the last iteration.
  Vector x_half;
  Vector v_half;
  bool started = false;
};

struct ConsensusState {
  std::vector<ConsensusAgentState> agents;
  int iteration = 0;
  /// Gradient evaluations per agent (OGDA: one per iteration, EG: two).
  long grad_calls = 0;

  Vector stacked_x() const;
  Vector stacked_v() const;
  /// col(x, v).
  Vector stacked() const;
  Vector stacked_half() const;
};

/// x0 per agent (projected onto nothing: infeasible starts are allowed);
/// v0 = 0 unless given.
ConsensusState make_consensus_state(const ConsensusProblem& problem, const std::vector<Vector>& x0,
                                    const std::vector<Vector>& v0 = {});

/// One round of the distributed OGDA update; previous-iteration copies are
/// initialized to the current values on the first call.
ConsensusState step_consensus_ogda(const ConsensusProblem& problem, const ConsensusState& state, double alpha,
                                   const Schedule& schedule = {});

/// Distributed extra-gradient: mid-point round, then the final round from
/// the neighbors' mid-point values.
ConsensusState step_consensus_eg(const ConsensusProblem& problem, const ConsensusState& state, double alpha,
                                 const Schedule& schedule = {});

/// Validates alpha against 1/(2 kappa_c) (OGDA) or 1/kappa_c (EG); 0 picks 0.9 of the bound.
double consensus_step_size(const ConsensusProblem& problem, Method method, double alpha, bool allow_unsafe = false);

void write_consensus_header(std::ostream& out, int m);
void write_consensus_rows(std::ostream& out, const ConsensusProblem& problem, const ConsensusState& state);

}  // namespace saddlenet
