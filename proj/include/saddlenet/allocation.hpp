#pragma once

#include <functional>
#include <ostream>
#include <vector>

#include "saddlenet/common.hpp"
#include "saddlenet/exchange.hpp"
#include "saddlenet/graph.hpp"
#include "saddlenet/saddle.hpp"
#include "saddlenet/sets.hpp"
#include "saddlenet/solvers.hpp"

namespace saddlenet {

/// Local data of agent i: h_i, Omega_i, W_i (m x q_i) and d_i (m).
struct AllocationAgent {
  std::function<double(const Vector&)> objective;
  std::function<Vector(const Vector&)> gradient;
  ConvexSet set = ConvexSet::whole_space(0);
  Matrix W;
  Vector d;
  double lipschitz = 0.0;

  Eigen::Index q() const { return W.cols(); }
};

/// min sum h_i(y_i) over y_i in Omega_i subject to sum W_i y_i = sum d_i.
struct AllocationProblem {
  NetworkGraph graph;
  int m = 1;
  std::vector<AllocationAgent> agents;
  /// l_h + sigma_max(W) + 2 lambda_max(L) + 1.
  double kappa_s = 0.0;
  /// Start of y_i inside the stacked y.
  std::vector<Eigen::Index> y_offset;
  Eigen::Index q_total = 0;

  int size() const { return graph.size(); }
  Eigen::Index dual_dim() const { return static_cast<Eigen::Index>(size()) * m; }
  /// dim of xi = col(y, a, lambda).
  Eigen::Index stacked_dim() const { return q_total + 2 * dual_dim(); }
};

AllocationProblem make_allocation_problem(NetworkGraph graph, int m, std::vector<AllocationAgent> agents);

double objective_sum(const AllocationProblem& problem, const Vector& y);

/// L2(y, a, lambda) = sum h_i(y_i) + lambda^T (W y - d - (L kron I) a) - 1/2 lambda^T (L kron I) lambda.
double lagrangian_L2(const AllocationProblem& problem, const Vector& y, const Vector& a, const Vector& lambda);

/// Psi = [grad h(y) + W^T lambda; -(L kron I) lambda; -(W y - d - (L kron I)(a + lambda))].
Vector operator_psi(const AllocationProblem& problem, const Vector& y, const Vector& a, const Vector& lambda);

/// ||sum_i (W_i y_i - d_i)||. Needs global information: diagnostics only.
double feasibility_gap(const AllocationProblem& problem, const Vector& y);

/// max_{i,j} ||lambda_i - lambda_j||.
double dual_spread(const AllocationProblem& problem, const Vector& lambda);

/// Centralized form with x-block (y, a), y-block lambda, value L2; uses sparse
/// block-diagonal W and L kron I_m. kappa_override = kappa_s.
SaddleProblem allocation_saddle_problem(const AllocationProblem& problem);

struct AllocationMessage {
  Vector a;
  Vector lambda;
};

struct AllocationAgentState {
  Vector y;
  Vector a;  ///< auxiliary variable
  Vector lambda;
  Vector y_prev;
  Vector a_prev;
  Vector lambda_prev;
  Vector grad_prev;  ///< grad h_i(y_i^{k-1})
  std::vector<AllocationMessage> neighbor_prev;
  Vector y_half;
  Vector a_half;
  Vector lambda_half;
  bool started = false;
};

struct AllocationState {
  std::vector<AllocationAgentState> agents;
  int iteration = 0;
  long grad_calls = 0;  ///< per agent

  Vector stacked_y() const;
  Vector stacked_a() const;
  Vector stacked_lambda() const;
  /// col(y, a, lambda).
  Vector stacked() const;
  Vector stacked_half() const;
};

/// y0 defaults to P_{Omega_i}(0); a0 = lambda0 = 0.
AllocationState make_allocation_state(const AllocationProblem& problem, const std::vector<Vector>& y0 = {});

/// Splits a stacked xi into per-agent state (previous copies unset).
AllocationState allocation_state_from_stacked(const AllocationProblem& problem, const Vector& xi);

AllocationState step_allocation_ogda(const AllocationProblem& problem, const AllocationState& state, double alpha,
                                     const Schedule& schedule = {});
AllocationState step_allocation_eg(const AllocationProblem& problem, const AllocationState& state, double alpha,
                                   const Schedule& schedule = {});

double allocation_step_size(const AllocationProblem& problem, Method method, double alpha, bool allow_unsafe = false);

void write_allocation_header(std::ostream& out, const AllocationProblem& problem);
void write_allocation_rows(std::ostream& out, const AllocationProblem& problem, const AllocationState& state);

}  // namespace saddlenet
