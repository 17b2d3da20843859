#include "saddlenet/allocation.hpp"

#include <algorithm>
#include <string>

#include <Eigen/SVD>
#include <Eigen/SparseCore>

#include "saddlenet/trace_io.hpp"

namespace saddlenet {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;

SparseMatrix kron_laplacian(const NetworkGraph& graph, int m) {
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < graph.size(); ++i) {
    for (int c = 0; c < m; ++c) {
      t.emplace_back(i * m + c, i * m + c, static_cast<double>(graph.degree(i)));
      for (int j : graph.neighbors(i)) t.emplace_back(i * m + c, j * m + c, -1.0);
    }
  }
  SparseMatrix l(static_cast<Eigen::Index>(graph.size()) * m, static_cast<Eigen::Index>(graph.size()) * m);
  l.setFromTriplets(t.begin(), t.end());
  return l;
}

SparseMatrix block_diag_w(const AllocationProblem& p) {
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < p.size(); ++i) {
    const Matrix& w = p.agents[i].W;
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        if (w(r, c) != 0.0) t.emplace_back(static_cast<Eigen::Index>(i) * p.m + r, p.y_offset[i] + c, w(r, c));
  }
  SparseMatrix out(p.dual_dim(), p.q_total);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

Eigen::Index dual_at(int i, int m) { return static_cast<Eigen::Index>(i) * m; }

}  // namespace

AllocationProblem make_allocation_problem(NetworkGraph graph, int m, std::vector<AllocationAgent> agents) {
  if (m < 1) throw ValidationError("allocation: constraint dimension m must be >= 1");
  if (static_cast<int>(agents.size()) != graph.size()) {
    throw ValidationError("allocation: " + std::to_string(agents.size()) + " agents for a graph of " +
                          std::to_string(graph.size()) + " vertices");
  }
  AllocationProblem p{graph, m, {}, 0.0, {}, 0};
  double l_h = 0.0, sigma_w = 0.0;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto& a = agents[i];
    const std::string who = "allocation: agent " + std::to_string(i);
    if (!a.objective || !a.gradient) throw ValidationError(who + " lacks an oracle");
    if (a.W.rows() != m) throw ValidationError(who + " W must have m rows");
    if (a.d.size() != m) throw ValidationError(who + " d must have m entries");
    if (a.set.dim() != a.q()) throw ValidationError(who + " set dimension differs from W columns");
    if (!(a.lipschitz >= 0.0)) throw ValidationError(who + " negative Lipschitz constant");
    l_h = std::max(l_h, a.lipschitz);
    if (a.W.size() > 0) sigma_w = std::max(sigma_w, Eigen::JacobiSVD<Matrix>(a.W).singularValues()[0]);
    p.y_offset.push_back(p.q_total);
    p.q_total += a.q();
  }
  p.kappa_s = l_h + sigma_w + 2.0 * lambda_max(graph) + 1.0;
  p.agents = std::move(agents);
  return p;
}

double objective_sum(const AllocationProblem& problem, const Vector& y) {
  require(y.size() == problem.q_total, "objective_sum: dimension mismatch");
  double s = 0.0;
  for (int i = 0; i < problem.size(); ++i) {
    s += problem.agents[i].objective(y.segment(problem.y_offset[i], problem.agents[i].q()));
  }
  return s;
}

namespace {

// W y - d, blockwise.
Vector residual_wy_d(const AllocationProblem& p, const Vector& y) {
  Vector r(p.dual_dim());
  for (int i = 0; i < p.size(); ++i) {
    const auto& a = p.agents[i];
    r.segment(dual_at(i, p.m), p.m) = a.W * y.segment(p.y_offset[i], a.q()) - a.d;
  }
  return r;
}

}  // namespace

double lagrangian_L2(const AllocationProblem& problem, const Vector& y, const Vector& a, const Vector& lambda) {
  require(a.size() == problem.dual_dim() && lambda.size() == problem.dual_dim(), "lagrangian_L2: dimension mismatch");
  const Vector la = problem.graph.laplacian_apply(a, problem.m);
  const Vector ll = problem.graph.laplacian_apply(lambda, problem.m);
  return objective_sum(problem, y) + lambda.dot(residual_wy_d(problem, y) - la) - 0.5 * lambda.dot(ll);
}

Vector operator_psi(const AllocationProblem& problem, const Vector& y, const Vector& a, const Vector& lambda) {
  const Eigen::Index q = problem.q_total, n = problem.dual_dim();
  require(y.size() == q && a.size() == n && lambda.size() == n, "operator_psi: dimension mismatch");
  const int m = problem.m;
  Vector out(q + 2 * n);
  for (int i = 0; i < problem.size(); ++i) {
    const auto& ag = problem.agents[i];
    out.segment(problem.y_offset[i], ag.q()) =
        ag.gradient(y.segment(problem.y_offset[i], ag.q())) + ag.W.transpose() * lambda.segment(dual_at(i, m), m);
  }
  out.segment(q, n) = -problem.graph.laplacian_apply(lambda, m);
  out.tail(n) = -(residual_wy_d(problem, y) - problem.graph.laplacian_apply(a + lambda, m));
  return out;
}

double feasibility_gap(const AllocationProblem& problem, const Vector& y) {
  require(y.size() == problem.q_total, "feasibility_gap: dimension mismatch");
  Vector total = Vector::Zero(problem.m);
  const Vector r = residual_wy_d(problem, y);
  for (int i = 0; i < problem.size(); ++i) total += r.segment(dual_at(i, problem.m), problem.m);
  return total.norm();
}

double dual_spread(const AllocationProblem& problem, const Vector& lambda) {
  require(lambda.size() == problem.dual_dim(), "dual_spread: dimension mismatch");
  double worst = 0.0;
  const int m = problem.m;
  for (int i = 0; i < problem.size(); ++i)
    for (int j = i + 1; j < problem.size(); ++j)
      worst = std::max(worst, (lambda.segment(dual_at(i, m), m) - lambda.segment(dual_at(j, m), m)).norm());
  return worst;
}

SaddleProblem allocation_saddle_problem(const AllocationProblem& problem) {
  const Eigen::Index q = problem.q_total, n = problem.dual_dim();
  auto lk = std::make_shared<const SparseMatrix>(kron_laplacian(problem.graph, problem.m));
  auto w = std::make_shared<const SparseMatrix>(block_diag_w(problem));
  Vector d(n);
  for (int i = 0; i < problem.size(); ++i) d.segment(dual_at(i, problem.m), problem.m) = problem.agents[i].d;
  auto agents = std::make_shared<const std::vector<AllocationAgent>>(problem.agents);
  auto offsets = std::make_shared<const std::vector<Eigen::Index>>(problem.y_offset);

  auto h_sum = [agents, offsets](const Vector& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < agents->size(); ++i) s += (*agents)[i].objective(y.segment((*offsets)[i], (*agents)[i].q()));
    return s;
  };
  auto h_grad = [agents, offsets](const Vector& y) {
    Vector g(y.size());
    for (std::size_t i = 0; i < agents->size(); ++i) {
      const auto qi = (*agents)[i].q();
      g.segment((*offsets)[i], qi) = (*agents)[i].gradient(y.segment((*offsets)[i], qi));
    }
    return g;
  };

  std::vector<ConvexSet> sets;
  for (const auto& a : problem.agents) sets.push_back(a.set);
  sets.push_back(ConvexSet::whole_space(n));

  SaddleProblem sp;
  sp.name = "allocation-L2";
  sp.dim_x = q + n;
  sp.dim_y = n;
  sp.set_x = ConvexSet::product(std::move(sets));
  sp.set_y = ConvexSet::whole_space(n);
  sp.value = [=](const Vector& ya, const Vector& lambda) {
    const Vector y = ya.head(q), a = ya.tail(n);
    return h_sum(y) + lambda.dot(*w * y - d - *lk * a) - 0.5 * lambda.dot(*lk * lambda);
  };
  sp.grad_x = [=](const Vector& ya, const Vector& lambda) -> Vector {
    Vector g(q + n);
    g.head(q) = h_grad(ya.head(q)) + w->transpose() * lambda;
    g.tail(n) = -(*lk * lambda);
    return g;
  };
  sp.grad_y = [=](const Vector& ya, const Vector& lambda) -> Vector {
    return *w * ya.head(q) - d - *lk * (ya.tail(n) + lambda);
  };
  sp.kappa_override = problem.kappa_s;
  return sp;
}

namespace {

Vector stack_field(const std::vector<AllocationAgentState>& agents, Vector AllocationAgentState::*field) {
  Eigen::Index total = 0;
  for (const auto& a : agents) total += (a.*field).size();
  Vector out(total);
  Eigen::Index at = 0;
  for (const auto& a : agents) {
    out.segment(at, (a.*field).size()) = a.*field;
    at += (a.*field).size();
  }
  return out;
}

Vector concat3(const Vector& a, const Vector& b, const Vector& c) {
  Vector out(a.size() + b.size() + c.size());
  out << a, b, c;
  return out;
}

}  // namespace

Vector AllocationState::stacked_y() const { return stack_field(agents, &AllocationAgentState::y); }
Vector AllocationState::stacked_a() const { return stack_field(agents, &AllocationAgentState::a); }
Vector AllocationState::stacked_lambda() const { return stack_field(agents, &AllocationAgentState::lambda); }
Vector AllocationState::stacked() const { return concat3(stacked_y(), stacked_a(), stacked_lambda()); }
Vector AllocationState::stacked_half() const {
  return concat3(stack_field(agents, &AllocationAgentState::y_half), stack_field(agents, &AllocationAgentState::a_half),
                 stack_field(agents, &AllocationAgentState::lambda_half));
}

AllocationState make_allocation_state(const AllocationProblem& problem, const std::vector<Vector>& y0) {
  require(y0.empty() || static_cast<int>(y0.size()) == problem.size(), "allocation state: one y0 per agent required");
  AllocationState s;
  s.agents.resize(problem.size());
  for (int i = 0; i < problem.size(); ++i) {
    const auto& ag = problem.agents[i];
    auto& st = s.agents[i];
    st.y = y0.empty() ? ag.set.project(Vector::Zero(ag.q())) : y0[i];
    require(st.y.size() == ag.q(), "allocation state: y0 has wrong dimension");
    st.a = Vector::Zero(problem.m);
    st.lambda = Vector::Zero(problem.m);
  }
  return s;
}

AllocationState allocation_state_from_stacked(const AllocationProblem& problem, const Vector& xi) {
  require(xi.size() == problem.stacked_dim(), "allocation_state_from_stacked: dimension mismatch");
  AllocationState s;
  s.agents.resize(problem.size());
  const Eigen::Index q = problem.q_total, n = problem.dual_dim();
  for (int i = 0; i < problem.size(); ++i) {
    auto& st = s.agents[i];
    st.y = xi.segment(problem.y_offset[i], problem.agents[i].q());
    st.a = xi.segment(q + dual_at(i, problem.m), problem.m);
    st.lambda = xi.segment(q + n + dual_at(i, problem.m), problem.m);
  }
  return s;
}

double allocation_step_size(const AllocationProblem& problem, Method method, double alpha, bool allow_unsafe) {
  require(method != Method::GDA, "distributed allocation supports OGDA and EG only");
  SolverConfig cfg;
  cfg.method = method;
  cfg.step_size = alpha;
  cfg.allow_unsafe_step = allow_unsafe;
  return resolve_step_size(cfg, problem.kappa_s);
}

namespace {

// sum_j (a_i - a_j) and sum_j (lambda_i - lambda_j).
template <class Neighbors>
void neighbor_differences(const Vector& a, const Vector& lambda, const Neighbors& nb, std::size_t count, Vector& da,
                          Vector& dl) {
  da.setZero(a.size());
  dl.setZero(lambda.size());
  for (std::size_t s = 0; s < count; ++s) {
    da += a - nb[s].a;
    dl += lambda - nb[s].lambda;
  }
}

void check_state(const AllocationProblem& problem, const AllocationState& state) {
  require(static_cast<int>(state.agents.size()) == problem.size(), "allocation state does not match the problem");
}

}  // namespace

AllocationState step_allocation_ogda(const AllocationProblem& problem, const AllocationState& state, double alpha,
                                     const Schedule& schedule) {
  check_state(problem, state);
  const int n = problem.size();
  Exchange<AllocationMessage> round(problem.graph);
  for (int i = 0; i < n; ++i) round.publish(i, {state.agents[i].a, state.agents[i].lambda});

  AllocationState next = state;
  Vector da, dl, da_prev, dl_prev;
  for (int i : resolve_schedule(schedule, n)) {
    const auto& me = state.agents[i];
    const auto& ag = problem.agents[i];
    const auto inbox = round.inbox(i);

    const Vector grad = ag.gradient(me.y);
    neighbor_differences(me.a, me.lambda, inbox, inbox.size(), da, dl);

    const Vector& y_prev = me.started ? me.y_prev : me.y;
    const Vector& a_prev = me.started ? me.a_prev : me.a;
    const Vector& l_prev = me.started ? me.lambda_prev : me.lambda;
    const Vector& grad_prev = me.started ? me.grad_prev : grad;
    if (me.started) {
      neighbor_differences(a_prev, l_prev, me.neighbor_prev, me.neighbor_prev.size(), da_prev, dl_prev);
    } else {
      da_prev = da;
      dl_prev = dl;
    }

    auto& out = next.agents[i];
    out.y = ag.set.project(me.y - 2.0 * alpha * (grad + ag.W.transpose() * me.lambda) +
                           alpha * (grad_prev + ag.W.transpose() * l_prev));
    out.a = me.a + 2.0 * alpha * dl - alpha * dl_prev;
    out.lambda = me.lambda + 2.0 * alpha * (ag.W * me.y - ag.d - (da + dl)) -
                 alpha * (ag.W * y_prev - ag.d - (da_prev + dl_prev));
    out.y_prev = me.y;
    out.a_prev = me.a;
    out.lambda_prev = me.lambda;
    out.grad_prev = grad;
    out.neighbor_prev.clear();
    for (std::size_t s = 0; s < inbox.size(); ++s) out.neighbor_prev.push_back(inbox[s]);
    out.started = true;
  }
  ++next.iteration;
  next.grad_calls += 1;
  return next;
}

AllocationState step_allocation_eg(const AllocationProblem& problem, const AllocationState& state, double alpha,
                                   const Schedule& schedule) {
  check_state(problem, state);
  const int n = problem.size();
  const auto order = resolve_schedule(schedule, n);

  Exchange<AllocationMessage> first(problem.graph);
  for (int i = 0; i < n; ++i) first.publish(i, {state.agents[i].a, state.agents[i].lambda});

  AllocationState next = state;
  Vector da, dl;
  for (int i : order) {
    const auto& me = state.agents[i];
    const auto& ag = problem.agents[i];
    const auto inbox = first.inbox(i);
    neighbor_differences(me.a, me.lambda, inbox, inbox.size(), da, dl);
    auto& out = next.agents[i];
    out.y_half = ag.set.project(me.y - alpha * (ag.gradient(me.y) + ag.W.transpose() * me.lambda));
    out.a_half = me.a + alpha * dl;
    out.lambda_half = me.lambda + alpha * (ag.W * me.y - ag.d - (da + dl));
    out.neighbor_prev.clear();
    for (std::size_t s = 0; s < inbox.size(); ++s) out.neighbor_prev.push_back(inbox[s]);
  }

  Exchange<AllocationMessage> second(problem.graph);
  for (int i = 0; i < n; ++i) second.publish(i, {next.agents[i].a_half, next.agents[i].lambda_half});

  for (int i : order) {
    const auto& me = state.agents[i];
    const auto& ag = problem.agents[i];
    auto& out = next.agents[i];
    const auto inbox = second.inbox(i);
    neighbor_differences(out.a_half, out.lambda_half, inbox, inbox.size(), da, dl);
    // Final step starts from y^k, as in the generic extra-gradient update.
    out.y = ag.set.project(me.y - alpha * (ag.gradient(out.y_half) + ag.W.transpose() * out.lambda_half));
    out.a = me.a + alpha * dl;
    out.lambda = me.lambda + alpha * (ag.W * out.y_half - ag.d - (da + dl));
    out.y_prev = me.y;
    out.a_prev = me.a;
    out.lambda_prev = me.lambda;
    out.started = true;
  }
  ++next.iteration;
  next.grad_calls += 2;
  return next;
}

void write_allocation_header(std::ostream& out, const AllocationProblem& problem) {
  Eigen::Index qmax = 0;
  for (const auto& a : problem.agents) qmax = std::max(qmax, a.q());
  std::vector<std::string> cols = {"iter", "agent_id"};
  for (Eigen::Index c = 0; c < qmax; ++c) cols.push_back("y" + std::to_string(c));
  for (int c = 0; c < problem.m; ++c) cols.push_back("a" + std::to_string(c));
  for (int c = 0; c < problem.m; ++c) cols.push_back("lambda" + std::to_string(c));
  cols.push_back("feasibility_gap");
  cols.push_back("objective_sum");
  CsvWriter(out).header(cols);
}

void write_allocation_rows(std::ostream& out, const AllocationProblem& problem, const AllocationState& state) {
  Eigen::Index qmax = 0;
  for (const auto& a : problem.agents) qmax = std::max(qmax, a.q());
  const Vector y = state.stacked_y();
  const double gap = feasibility_gap(problem, y);
  const double obj = objective_sum(problem, y);
  CsvWriter w(out);
  for (int i = 0; i < problem.size(); ++i) {
    const auto& st = state.agents[i];
    w.cell(state.iteration).cell(i);
    for (Eigen::Index c = 0; c < qmax; ++c) {
      if (c < st.y.size()) {
        w.cell(st.y[c]);
      } else {
        w.cell(std::string());
      }
    }
    for (int c = 0; c < problem.m; ++c) w.cell(st.a[c]);
    for (int c = 0; c < problem.m; ++c) w.cell(st.lambda[c]);
    w.cell(gap).cell(obj);
    w.end_row();
  }
}

}  // namespace saddlenet
