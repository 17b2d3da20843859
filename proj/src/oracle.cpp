#include "saddlenet/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>

namespace saddlenet::oracle {

namespace {

constexpr double kCertifyTol = 1e-8;

struct Interval {
  double lo;
  double hi;
};

Interval scalar_box(const ConvexSet& set, const std::string& who) {
  if (!set.is_box()) throw ContractError(who + ": set must be a box");
  const auto& b = std::get<ConvexSet::Box>(set.variant());
  if (!std::isfinite(b.lower[0]) || !std::isfinite(b.upper[0])) throw ContractError(who + ": box must be bounded");
  return {b.lower[0], b.upper[0]};
}

double derivative(const AllocationAgent& a, double y) {
  Vector p(1);
  p[0] = y;
  return a.gradient(p)[0];
}

double value(const AllocationAgent& a, double y) {
  Vector p(1);
  p[0] = y;
  return a.objective(p);
}

// argmin over [lo, hi] of h(y) + c y, from the sign of the (monotone) derivative.
double scalar_argmin(const AllocationAgent& a, double c, Interval box) {
  if (derivative(a, box.lo) + c >= 0.0) return box.lo;
  if (derivative(a, box.hi) + c <= 0.0) return box.hi;
  double lo = box.lo, hi = box.hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (derivative(a, mid) + c < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Minimum of a convex function on [lo, hi] by repeated grid refinement,
// using function values only.
double grid_min(const std::function<double(double)>& phi, Interval box) {
  double lo = box.lo, hi = box.hi;
  double best = std::numeric_limits<double>::infinity();
  constexpr int kCells = 200;
  for (int round = 0; round < 60 && hi - lo > 1e-13 * (1.0 + std::abs(lo)); ++round) {
    const double h = (hi - lo) / kCells;
    int arg = 0;
    double local = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= kCells; ++k) {
      const double v = phi(lo + k * h);
      if (v < local) {
        local = v;
        arg = k;
      }
    }
    best = std::min(best, local);
    const double center = lo + arg * h;
    lo = std::max(box.lo, center - 2 * h);
    hi = std::min(box.hi, center + 2 * h);
  }
  return best;
}

}  // namespace

KKTReference solve_allocation_kkt(const AllocationProblem& problem) {
  if (problem.m != 1) throw ContractError("solve_allocation_kkt: only scalar coupling (m = 1) is supported");
  const int n = problem.size();
  std::vector<Interval> boxes;
  std::vector<double> w(n);
  double d_total = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& a = problem.agents[i];
    if (a.q() != 1) throw ContractError("solve_allocation_kkt: agent " + std::to_string(i) + " must have q_i = 1");
    boxes.push_back(scalar_box(a.set, "solve_allocation_kkt: agent " + std::to_string(i)));
    w[i] = a.W(0, 0);
    d_total += a.d[0];
  }

  auto y_of = [&](double mu) {
    Vector y(n);
    for (int i = 0; i < n; ++i) y[i] = scalar_argmin(problem.agents[i], mu * w[i], boxes[i]);
    return y;
  };
  auto gap_of = [&](const Vector& y) {
    double s = -d_total;
    for (int i = 0; i < n; ++i) s += w[i] * y[i];
    return s;
  };

  // Bracket from the largest derivative magnitude on the boxes (convexity puts
  // it at an endpoint) and the smallest nonzero |W_i|.
  double grad_bound = 0.0, w_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    grad_bound = std::max({grad_bound, std::abs(derivative(problem.agents[i], boxes[i].lo)),
                           std::abs(derivative(problem.agents[i], boxes[i].hi))});
    if (w[i] != 0.0) w_min = std::min(w_min, std::abs(w[i]));
  }
  double bracket = std::isfinite(w_min) ? 10.0 * (1.0 + grad_bound / w_min) : 10.0;

  KKTReference ref;
  double gap_lo = gap_of(y_of(-bracket)), gap_hi = gap_of(y_of(bracket));
  while (!(gap_lo >= 0.0 && gap_hi <= 0.0)) {
    if (ref.widenings == 5) {
      throw ValidationError("solve_allocation_kkt: infeasible coupling constraint (gap keeps one sign over mu in [" +
                            std::to_string(-bracket) + ", " + std::to_string(bracket) + "])");
    }
    bracket *= 10.0;
    ++ref.widenings;
    gap_lo = gap_of(y_of(-bracket));
    gap_hi = gap_of(y_of(bracket));
  }

  // gap(mu) is nonincreasing in mu.
  double mu_lo = -bracket, mu_hi = bracket;
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (mu_lo + mu_hi);
    if (mid <= mu_lo || mid >= mu_hi) break;
    const double g = gap_of(y_of(mid));
    if (g == 0.0) {
      mu_lo = mu_hi = mid;
      break;
    }
    if (g > 0.0) {
      mu_lo = mid;
    } else {
      mu_hi = mid;
    }
  }
  const Vector y_lo = y_of(mu_lo), y_hi = y_of(mu_hi);
  gap_lo = gap_of(y_lo);
  gap_hi = gap_of(y_hi);
  // Agents whose box-argmin jumps at mu* (flat objectives) take the convex
  // combination that closes the remaining gap.
  const double theta = gap_lo == gap_hi ? 0.0 : gap_lo / (gap_lo - gap_hi);
  ref.y_star = y_lo + theta * (y_hi - y_lo);
  ref.mu = Vector::Constant(1, 0.5 * (mu_lo + mu_hi));

  ref.residuals.feasibility = std::abs(gap_of(ref.y_star));
  for (int i = 0; i < n; ++i) {
    const auto& ag = problem.agents[i];
    const double c = ref.mu[0] * w[i];
    auto phi = [&](double y) { return value(ag, y) + c * y; };
    const double slack = phi(ref.y_star[i]) - grid_min(phi, boxes[i]);
    ref.residuals.stationarity = std::max(ref.residuals.stationarity, slack);
  }
  ref.objective = objective_sum(problem, ref.y_star);
  if (ref.residuals.feasibility > kCertifyTol) {
    throw InvariantError("solve_allocation_kkt: feasibility residual " + std::to_string(ref.residuals.feasibility));
  }
  return ref;
}

ConvexSet consensus_feasible_box(const ConsensusProblem& problem) {
  Vector lo = Vector::Constant(problem.m, -std::numeric_limits<double>::infinity());
  Vector hi = Vector::Constant(problem.m, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < problem.agents.size(); ++i) {
    const auto& set = problem.agents[i].set;
    if (set.is_whole_space()) continue;
    if (!set.is_box()) throw ContractError("consensus reference: agent " + std::to_string(i) + " set must be a box");
    const auto& b = std::get<ConvexSet::Box>(set.variant());
    lo = lo.cwiseMax(b.lower);
    hi = hi.cwiseMin(b.upper);
  }
  for (Eigen::Index c = 0; c < lo.size(); ++c) {
    if (lo[c] > hi[c]) throw ValidationError("consensus reference: the agents' sets do not intersect");
  }
  return ConvexSet::box(lo, hi);
}

namespace {

Vector total_gradient(const ConsensusProblem& problem, const Vector& s) {
  Vector g = Vector::Zero(problem.m);
  for (const auto& a : problem.agents) g += a.gradient(s);
  return g;
}

double total_value(const ConsensusProblem& problem, const Vector& s) {
  double v = 0.0;
  for (const auto& a : problem.agents) v += a.objective(s);
  return v;
}

}  // namespace

Vector solve_consensus_reference(const ConsensusProblem& problem) {
  const ConvexSet box = consensus_feasible_box(problem);
  const auto& b = std::get<ConvexSet::Box>(box.variant());
  const int m = problem.m;

  Vector s = box.project(Vector::Zero(m));
  if (total_gradient(problem, s).norm() == 0.0) return s;

  if (m == 1) {
    constexpr double kFar = 1e6;
    double lo = std::isfinite(b.lower[0]) ? b.lower[0] : -kFar;
    double hi = std::isfinite(b.upper[0]) ? b.upper[0] : kFar;
    auto f = [&](double t) {
      Vector p(1);
      p[0] = t;
      return total_value(problem, p);
    };
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - inv_phi * (hi - lo), d = lo + inv_phi * (hi - lo);
    double fc = f(c), fd = f(d);
    while (hi - lo > 1e-9 * (1.0 + std::abs(lo) + std::abs(hi))) {
      if (fc < fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - inv_phi * (hi - lo);
        fc = f(c);
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + inv_phi * (hi - lo);
        fd = f(d);
      }
    }
    // Polish with the monotone derivative inside the golden-section bracket.
    auto g = [&](double t) {
      Vector p(1);
      p[0] = t;
      return total_gradient(problem, p)[0];
    };
    lo = std::max(lo - 1e-6, std::isfinite(b.lower[0]) ? b.lower[0] : -kFar);
    hi = std::min(hi + 1e-6, std::isfinite(b.upper[0]) ? b.upper[0] : kFar);
    if (g(lo) >= 0.0) {
      s[0] = lo;
    } else if (g(hi) <= 0.0) {
      s[0] = hi;
    } else {
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (g(mid) < 0.0 ? lo : hi) = mid;
      }
      s[0] = 0.5 * (lo + hi);
    }
  } else {
    double l_sum = 0.0;
    for (const auto& a : problem.agents) l_sum += a.lipschitz;
    if (!(l_sum > 0.0)) throw ContractError("consensus reference: objectives need positive Lipschitz constants");
    const double step = 1.0 / l_sum;
    for (long it = 0; it < 10'000'000L; ++it) {
      const Vector next = box.project(s - step * total_gradient(problem, s));
      const double moved = (next - s).norm();
      s = next;
      if (moved <= 1e-15 * (1.0 + s.norm())) break;
    }
  }

  const Vector g = total_gradient(problem, s);
  const double scale = 1.0 + g.norm();
  const double ncr = normal_cone_residual(box, s, g / scale, 1000);
  if (ncr < -kCertifyTol) {
    throw InvariantError("consensus reference: certification failed (normal-cone residual " + std::to_string(ncr) + ")");
  }
  return s;
}

Vector solve_laplacian(const NetworkGraph& graph, int m, const Vector& r) {
  const int n = graph.size();
  require(r.size() == static_cast<Eigen::Index>(n) * m, "solve_laplacian: dimension mismatch");
  // (L + 11^T/n) is positive definite on a connected graph and agrees with L
  // on zero-mean vectors.
  Matrix a = graph.laplacian();
  a.array() += 1.0 / n;
  const Eigen::LDLT<Matrix> ldlt(a);
  Vector out(r.size());
  for (int c = 0; c < m; ++c) {
    Vector rc(n);
    for (int i = 0; i < n; ++i) rc[i] = r[static_cast<Eigen::Index>(i) * m + c];
    const Vector uc = ldlt.solve(rc);
    for (int i = 0; i < n; ++i) out[static_cast<Eigen::Index>(i) * m + c] = uc[i];
  }
  return out;
}

namespace {

// Natural-map residual of a stacked operator over a product set.
double natural_residual(const ConvexSet& set, const Vector& z, const Vector& f) {
  return (z - set.project(z - f)).norm();
}

ConvexSet consensus_theta(const ConsensusProblem& problem) {
  std::vector<ConvexSet> sets;
  for (const auto& a : problem.agents) sets.push_back(a.set);
  sets.push_back(ConvexSet::whole_space(problem.stacked_dim()));
  return ConvexSet::product(std::move(sets));
}

}  // namespace

Vector consensus_saddle_reference(const ConsensusProblem& problem, const Vector& s_star) {
  require(s_star.size() == problem.m, "consensus_saddle_reference: s* has wrong dimension");
  const int n = problem.size(), m = problem.m;
  const Eigen::Index nm = problem.stacked_dim();
  Vector x(nm);
  for (int i = 0; i < n; ++i) x.segment(static_cast<Eigen::Index>(i) * m, m) = s_star;

  bool interior = true;
  for (const auto& a : problem.agents) {
    if (a.set.is_whole_space()) continue;
    auto [lo, hi] = a.set.sampling_bounds();
    if (((s_star - lo).minCoeff() <= 1e-9) || ((hi - s_star).minCoeff() <= 1e-9)) interior = false;
  }

  const ConvexSet theta = consensus_theta(problem);
  Vector w(2 * nm);
  if (interior) {
    Vector rhs(nm);
    for (int i = 0; i < n; ++i) rhs.segment(static_cast<Eigen::Index>(i) * m, m) = -problem.agents[i].gradient(s_star);
    w << x, solve_laplacian(problem.graph, m, rhs);
  } else {
    // Projected extra-gradient on Phi from (x*, 0) until the natural residual stalls.
    const double alpha = 0.5 / problem.kappa_c;
    w << x, Vector::Zero(nm);
    for (long it = 0; it < 1'000'000L; ++it) {
      const Vector mid = theta.project(w - alpha * operator_phi(problem, w.head(nm), w.tail(nm)));
      w = theta.project(w - alpha * operator_phi(problem, mid.head(nm), mid.tail(nm)));
      if (it % 100 == 0 && natural_residual(theta, w, operator_phi(problem, w.head(nm), w.tail(nm))) < 1e-13) break;
    }
  }
  const double res = natural_residual(theta, w, operator_phi(problem, w.head(nm), w.tail(nm)));
  if (res > kCertifyTol) {
    throw InvariantError("consensus_saddle_reference: vi residual " + std::to_string(res) + " exceeds 1e-8");
  }
  return w;
}

Vector allocation_saddle_reference(const AllocationProblem& problem, const KKTReference& kkt) {
  const int n = problem.size(), m = problem.m;
  const Eigen::Index q = problem.q_total, nm = problem.dual_dim();
  require(kkt.y_star.size() == q && kkt.mu.size() == m, "allocation_saddle_reference: reference has wrong shape");
  Vector r(nm), lambda(nm);
  for (int i = 0; i < n; ++i) {
    const auto& ag = problem.agents[i];
    r.segment(static_cast<Eigen::Index>(i) * m, m) = ag.W * kkt.y_star.segment(problem.y_offset[i], ag.q()) - ag.d;
    lambda.segment(static_cast<Eigen::Index>(i) * m, m) = kkt.mu;
  }
  // Remove the block mean left by round-off so r lies in range(L kron I).
  Vector mean = Vector::Zero(m);
  for (int i = 0; i < n; ++i) mean += r.segment(static_cast<Eigen::Index>(i) * m, m);
  mean /= n;
  for (int i = 0; i < n; ++i) r.segment(static_cast<Eigen::Index>(i) * m, m) -= mean;

  Vector xi(q + 2 * nm);
  xi << kkt.y_star, solve_laplacian(problem.graph, m, r), lambda;

  std::vector<ConvexSet> sets;
  for (const auto& a : problem.agents) sets.push_back(a.set);
  sets.push_back(ConvexSet::whole_space(2 * nm));
  const ConvexSet theta = ConvexSet::product(std::move(sets));
  const Vector psi = operator_psi(problem, xi.head(q), xi.segment(q, nm), xi.tail(nm));
  const double res = natural_residual(theta, xi, psi);
  if (res > kCertifyTol) {
    throw InvariantError("allocation_saddle_reference: vi residual " + std::to_string(res) + " exceeds 1e-8");
  }
  return xi;
}

FiniteDiffReport finite_diff_check(const std::function<double(const Vector&)>& f,
                                   const std::function<Vector(const Vector&)>& grad, const std::vector<Vector>& points,
                                   double tol) {
  FiniteDiffReport report;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const Vector& p = points[k];
    const double h = 1e-6 * (1.0 + p.norm());
    const Vector g = grad(p);
    Vector fd(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      Vector pp = p, pm = p;
      pp[i] += h;
      pm[i] -= h;
      fd[i] = (f(pp) - f(pm)) / (2.0 * h);
    }
    const double err = (fd - g).norm() / std::max(1.0, g.norm());
    if (err > report.max_rel_error || k == 0) {
      report.max_rel_error = std::max(report.max_rel_error, err);
      if (err >= report.max_rel_error) report.worst_point = k;
    }
  }
  report.passed = report.max_rel_error <= tol;
  return report;
}

}  // namespace saddlenet::oracle
