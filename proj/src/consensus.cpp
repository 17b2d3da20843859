#include "saddlenet/consensus.hpp"

#include <algorithm>
#include <string>

#include <Eigen/SparseCore>

#include "saddlenet/trace_io.hpp"

namespace saddlenet {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;

SparseMatrix kron_laplacian(const NetworkGraph& graph, int m) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (int i = 0; i < graph.size(); ++i) {
    for (int c = 0; c < m; ++c) {
      const int row = i * m + c;
      triplets.emplace_back(row, row, static_cast<double>(graph.degree(i)));
      for (int j : graph.neighbors(i)) triplets.emplace_back(row, j * m + c, -1.0);
    }
  }
  const Eigen::Index n = static_cast<Eigen::Index>(graph.size()) * m;
  SparseMatrix l(n, n);
  l.setFromTriplets(triplets.begin(), triplets.end());
  return l;
}

Eigen::Index offset(int i, int m) { return static_cast<Eigen::Index>(i) * m; }

}  // namespace

ConsensusProblem make_consensus_problem(NetworkGraph graph, int m, std::vector<ConsensusAgent> agents) {
  if (m < 1) throw ValidationError("consensus: decision dimension m must be >= 1");
  if (static_cast<int>(agents.size()) != graph.size()) {
    throw ValidationError("consensus: " + std::to_string(agents.size()) + " agents for a graph of " +
                          std::to_string(graph.size()) + " vertices");
  }
  double l_f = 0.0;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto& a = agents[i];
    if (!a.objective || !a.gradient) throw ValidationError("consensus: agent " + std::to_string(i) + " lacks an oracle");
    if (a.set.dim() != m) throw ValidationError("consensus: agent " + std::to_string(i) + " set has wrong dimension");
    if (!(a.lipschitz >= 0.0)) throw ValidationError("consensus: agent " + std::to_string(i) + " negative Lipschitz");
    l_f = std::max(l_f, a.lipschitz);
  }
  const double kappa = l_f + 2.0 * lambda_max(graph);
  return ConsensusProblem{std::move(graph), m, std::move(agents), kappa};
}

double objective_sum(const ConsensusProblem& problem, const Vector& x) {
  require(x.size() == problem.stacked_dim(), "objective_sum: dimension mismatch");
  double s = 0.0;
  for (int i = 0; i < problem.size(); ++i) s += problem.agents[i].objective(x.segment(offset(i, problem.m), problem.m));
  return s;
}

double lagrangian_L1(const ConsensusProblem& problem, const Vector& x, const Vector& v) {
  require(v.size() == problem.stacked_dim(), "lagrangian_L1: dimension mismatch");
  const Vector lx = problem.graph.laplacian_apply(x, problem.m);
  return objective_sum(problem, x) + v.dot(lx) + 0.5 * x.dot(lx);
}

Vector operator_phi(const ConsensusProblem& problem, const Vector& x, const Vector& v) {
  const Eigen::Index n = problem.stacked_dim();
  require(x.size() == n && v.size() == n, "operator_phi: dimension mismatch");
  const int m = problem.m;
  Vector out(2 * n);
  const Vector lxv = problem.graph.laplacian_apply(x + v, m);
  for (int i = 0; i < problem.size(); ++i) {
    out.segment(offset(i, m), m) = problem.agents[i].gradient(x.segment(offset(i, m), m));
  }
  out.head(n) += lxv;
  out.tail(n) = -problem.graph.laplacian_apply(x, m);
  return out;
}

double consensus_residual(const ConsensusProblem& problem, const Vector& x) {
  return problem.graph.laplacian_apply(x, problem.m).norm();
}

SaddleProblem consensus_saddle_problem(const ConsensusProblem& problem) {
  const Eigen::Index n = problem.stacked_dim();
  const int m = problem.m;
  auto lk = std::make_shared<const SparseMatrix>(kron_laplacian(problem.graph, m));
  // Shared copy of the agent oracles so the returned problem owns its data.
  auto agents = std::make_shared<const std::vector<ConsensusAgent>>(problem.agents);
  const int count = problem.size();

  std::vector<ConvexSet> sets;
  for (const auto& a : problem.agents) sets.push_back(a.set);

  SaddleProblem sp;
  sp.name = "consensus-L1";
  sp.dim_x = n;
  sp.dim_y = n;
  sp.set_x = ConvexSet::product(std::move(sets));
  sp.set_y = ConvexSet::whole_space(n);
  sp.value = [lk, agents, count, m](const Vector& x, const Vector& v) {
    double s = 0.0;
    for (int i = 0; i < count; ++i) s += (*agents)[i].objective(x.segment(offset(i, m), m));
    const Vector lx = *lk * x;
    return s + v.dot(lx) + 0.5 * x.dot(lx);
  };
  sp.grad_x = [lk, agents, count, m](const Vector& x, const Vector& v) -> Vector {
    Vector g(x.size());
    for (int i = 0; i < count; ++i) g.segment(offset(i, m), m) = (*agents)[i].gradient(x.segment(offset(i, m), m));
    return g + *lk * (x + v);
  };
  sp.grad_y = [lk](const Vector& x, const Vector&) -> Vector { return *lk * x; };
  sp.kappa_override = problem.kappa_c;
  return sp;
}

Vector ConsensusState::stacked_x() const {
  if (agents.empty()) return {};
  const Eigen::Index m = agents[0].x.size();
  Vector out(static_cast<Eigen::Index>(agents.size()) * m);
  for (std::size_t i = 0; i < agents.size(); ++i) out.segment(static_cast<Eigen::Index>(i) * m, m) = agents[i].x;
  return out;
}

Vector ConsensusState::stacked_v() const {
  if (agents.empty()) return {};
  const Eigen::Index m = agents[0].v.size();
  Vector out(static_cast<Eigen::Index>(agents.size()) * m);
  for (std::size_t i = 0; i < agents.size(); ++i) out.segment(static_cast<Eigen::Index>(i) * m, m) = agents[i].v;
  return out;
}

Vector ConsensusState::stacked() const {
  const Vector x = stacked_x(), v = stacked_v();
  Vector out(x.size() + v.size());
  out << x, v;
  return out;
}

Vector ConsensusState::stacked_half() const {
  if (agents.empty() || agents[0].x_half.size() == 0) return {};
  const Eigen::Index m = agents[0].x_half.size();
  const Eigen::Index n = static_cast<Eigen::Index>(agents.size()) * m;
  Vector out(2 * n);
  for (std::size_t i = 0; i < agents.size(); ++i) {
    out.segment(static_cast<Eigen::Index>(i) * m, m) = agents[i].x_half;
    out.segment(n + static_cast<Eigen::Index>(i) * m, m) = agents[i].v_half;
  }
  return out;
}

ConsensusState make_consensus_state(const ConsensusProblem& problem, const std::vector<Vector>& x0,
                                    const std::vector<Vector>& v0) {
  require(static_cast<int>(x0.size()) == problem.size(), "consensus state: one x0 per agent required");
  require(v0.empty() || static_cast<int>(v0.size()) == problem.size(), "consensus state: one v0 per agent required");
  ConsensusState s;
  s.agents.resize(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    require(x0[i].size() == problem.m, "consensus state: x0 has wrong dimension");
    s.agents[i].x = x0[i];
    s.agents[i].v = v0.empty() ? Vector::Zero(problem.m) : v0[i];
    require(s.agents[i].v.size() == problem.m, "consensus state: v0 has wrong dimension");
  }
  return s;
}

double consensus_step_size(const ConsensusProblem& problem, Method method, double alpha, bool allow_unsafe) {
  require(method != Method::GDA, "distributed consensus supports OGDA and EG only");
  SolverConfig cfg;
  cfg.method = method;
  cfg.step_size = alpha;
  cfg.allow_unsafe_step = allow_unsafe;
  return resolve_step_size(cfg, problem.kappa_c);
}

namespace {

// Sums over the inbox: sum_j (x_i - x_j) and sum_j (v_i - v_j).
template <class Neighbors>
void neighbor_differences(const Vector& x, const Vector& v, const Neighbors& nb, std::size_t count, Vector& dx,
                          Vector& dv) {
  dx.setZero(x.size());
  dv.setZero(v.size());
  for (std::size_t s = 0; s < count; ++s) {
    dx += x - nb[s].x;
    dv += v - nb[s].v;
  }
}

void check_state(const ConsensusProblem& problem, const ConsensusState& state) {
  require(static_cast<int>(state.agents.size()) == problem.size(), "consensus state does not match the problem");
}

}  // namespace

ConsensusState step_consensus_ogda(const ConsensusProblem& problem, const ConsensusState& state, double alpha,
                                   const Schedule& schedule) {
  check_state(problem, state);
  const int n = problem.size();
  Exchange<ConsensusMessage> round(problem.graph);
  for (int i = 0; i < n; ++i) round.publish(i, {state.agents[i].x, state.agents[i].v});

  ConsensusState next = state;
  Vector dx, dv, dx_prev, dv_prev;
  for (int i : resolve_schedule(schedule, n)) {
    const auto& me = state.agents[i];
    const auto& agent = problem.agents[i];
    const auto inbox = round.inbox(i);

    const Vector grad = agent.gradient(me.x);
    neighbor_differences(me.x, me.v, inbox, inbox.size(), dx, dv);

    const Vector& x_prev = me.started ? me.x_prev : me.x;
    const Vector& v_prev = me.started ? me.v_prev : me.v;
    const Vector& grad_prev = me.started ? me.grad_prev : grad;
    if (me.started) {
      neighbor_differences(x_prev, v_prev, me.neighbor_prev, me.neighbor_prev.size(), dx_prev, dv_prev);
    } else {
      dx_prev = dx;
      dv_prev = dv;
    }

    auto& out = next.agents[i];
    out.x = agent.set.project(me.x - 2.0 * alpha * grad + alpha * grad_prev - 2.0 * alpha * (dx + dv) +
                              alpha * (dx_prev + dv_prev));
    out.v = me.v + 2.0 * alpha * dx - alpha * dx_prev;
    out.x_prev = me.x;
    out.v_prev = me.v;
    out.grad_prev = grad;
    out.neighbor_prev.clear();
    for (std::size_t s = 0; s < inbox.size(); ++s) out.neighbor_prev.push_back(inbox[s]);
    out.started = true;
  }
  ++next.iteration;
  next.grad_calls += 1;
  return next;
}

ConsensusState step_consensus_eg(const ConsensusProblem& problem, const ConsensusState& state, double alpha,
                                 const Schedule& schedule) {
  check_state(problem, state);
  const int n = problem.size();
  const auto order = resolve_schedule(schedule, n);

  Exchange<ConsensusMessage> first(problem.graph);
  for (int i = 0; i < n; ++i) first.publish(i, {state.agents[i].x, state.agents[i].v});

  ConsensusState next = state;
  Vector dx, dv;
  for (int i : order) {
    const auto& me = state.agents[i];
    const auto inbox = first.inbox(i);
    neighbor_differences(me.x, me.v, inbox, inbox.size(), dx, dv);
    auto& out = next.agents[i];
    out.x_half = problem.agents[i].set.project(me.x - alpha * problem.agents[i].gradient(me.x) - alpha * (dx + dv));
    out.v_half = me.v + alpha * dx;
    out.neighbor_prev.clear();
    for (std::size_t s = 0; s < inbox.size(); ++s) out.neighbor_prev.push_back(inbox[s]);
  }

  Exchange<ConsensusMessage> second(problem.graph);
  for (int i = 0; i < n; ++i) second.publish(i, {next.agents[i].x_half, next.agents[i].v_half});

  for (int i : order) {
    const auto& me = state.agents[i];
    auto& out = next.agents[i];
    const auto inbox = second.inbox(i);
    neighbor_differences(out.x_half, out.v_half, inbox, inbox.size(), dx, dv);
    out.x = problem.agents[i].set.project(me.x - alpha * problem.agents[i].gradient(out.x_half) - alpha * (dx + dv));
    out.v = me.v + alpha * dx;
    out.x_prev = me.x;
    out.v_prev = me.v;
    out.started = true;
  }
  ++next.iteration;
  next.grad_calls += 2;
  return next;
}

void write_consensus_header(std::ostream& out, int m) {
  std::vector<std::string> cols = {"iter", "agent_id"};
  for (int c = 0; c < m; ++c) cols.push_back("x" + std::to_string(c));
  for (int c = 0; c < m; ++c) cols.push_back("v" + std::to_string(c));
  cols.push_back("consensus_residual");
  cols.push_back("objective_sum");
  CsvWriter(out).header(cols);
}

void write_consensus_rows(std::ostream& out, const ConsensusProblem& problem, const ConsensusState& state) {
  const Vector x = state.stacked_x();
  const double residual = consensus_residual(problem, x);
  const double obj = objective_sum(problem, x);
  CsvWriter w(out);
  for (int i = 0; i < problem.size(); ++i) {
    w.cell(state.iteration).cell(i);
    for (int c = 0; c < problem.m; ++c) w.cell(state.agents[i].x[c]);
    for (int c = 0; c < problem.m; ++c) w.cell(state.agents[i].v[c]);
    w.cell(residual).cell(obj);
    w.end_row();
  }
}

}  // namespace saddlenet
