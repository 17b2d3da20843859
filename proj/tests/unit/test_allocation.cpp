#include <cmath>

#include "helpers.hpp"
#include "saddlenet/allocation.hpp"
#include "saddlenet/catalog.hpp"
#include "saddlenet/harness.hpp"

using namespace saddlenet;
using testing::max_abs;
using testing::vec;

namespace {

AllocationAgent scalar_agent(std::function<double(double)> h, std::function<double(double)> dh, double w, double d,
                             double lo, double hi, double l) {
  AllocationAgent a;
  a.objective = [h](const Vector& y) { return h(y[0]); };
  a.gradient = [dh](const Vector& y) -> Vector { return Vector::Constant(1, dh(y[0])); };
  a.set = ConvexSet::uniform_box(1, lo, hi);
  a.W = Matrix::Constant(1, 1, w);
  a.d = Vector::Constant(1, d);
  a.lipschitz = l;
  return a;
}

AllocationAgent zero_agent(double w = 1.0, double d = 0.0) {
  auto a = scalar_agent([](double) { return 0.0; }, [](double) { return 0.0; }, w, d, 0, 0, 0.0);
  a.set = ConvexSet::whole_space(1);
  return a;
}

AllocationAgent quad_agent(double c, double lo = -10, double hi = 10) {
  return scalar_agent([c](double y) { return 0.5 * (y - c) * (y - c); }, [c](double y) { return y - c; }, 1.0, 0.0, lo,
                      hi, 1.0);
}

}  // namespace

TEST_CASE("modified Lagrangian values") {
  const auto p = make_allocation_problem(NetworkGraph::path(2), 1, {zero_agent(), zero_agent()});
  CHECK(lagrangian_L2(p, vec({1.0, -1.0}), vec({0.0, 0.0}), vec({1.0, 0.0})) == 0.5);

  const auto q = make_allocation_problem(NetworkGraph::ring(3), 1, {quad_agent(1), quad_agent(2), quad_agent(3)});
  const Vector y = vec({0.5, -1.0, 0.5});  // sum y = 0 = sum d
  CHECK(lagrangian_L2(q, y, vec({1.0, 2.0, 3.0}), Vector::Zero(3)) == objective_sum(q, y));
  CHECK(lagrangian_L2(q, y, vec({1.0, 2.0, 3.0}), Vector::Constant(3, 1.7)) ==
        doctest::Approx(objective_sum(q, y)).epsilon(1e-14));
}

TEST_CASE("operator Psi") {
  const auto p = make_allocation_problem(NetworkGraph::path(2), 1, {zero_agent(1.0, 0.5), zero_agent(2.0, 0.0)});
  const Vector y = vec({1.0, -3.0});
  const Vector psi = operator_psi(p, y, vec({0.3, -0.7}), Vector::Zero(2));
  // W y - d = (1 - 0.5, -6), (L)(a + 0) = (1, -1)
  CHECK(max_abs(psi.head(2), Vector::Zero(2)) == 0.0);
  CHECK(max_abs(psi.segment(2, 2), Vector::Zero(2)) == 0.0);
  CHECK(max_abs(psi.tail(2), vec({-(0.5 - 1.0), -(-6.0 + 1.0)})) <= 1e-15);

  const Vector plain = operator_psi(p, y, Vector::Zero(2), Vector::Zero(2));
  CHECK(plain.tail(2) == vec({-0.5, 6.0}));
}

TEST_CASE("feasibility gap and dual spread") {
  const auto p = make_allocation_problem(NetworkGraph::path(2), 1, {zero_agent(), zero_agent()});
  CHECK(feasibility_gap(p, vec({1.0, 1.0})) == 2.0);
  CHECK(feasibility_gap(p, vec({1.0, -1.0})) == 0.0);
  CHECK(dual_spread(p, vec({0.25, -0.5})) == 0.75);
  CHECK(dual_spread(p, vec({3.0, 3.0})) == 0.0);
}

TEST_CASE("kappa_s and validation") {
  const auto q = make_allocation_problem(NetworkGraph::ring(3), 1, {quad_agent(1), quad_agent(2), quad_agent(3)});
  CHECK(q.kappa_s == doctest::Approx(1.0 + 1.0 + 2.0 * 3.0 + 1.0).epsilon(1e-9));
  CHECK(q.stacked_dim() == 9);
  auto bad = quad_agent(1);
  bad.d = Vector::Zero(2);
  CHECK_THROWS_AS(make_allocation_problem(NetworkGraph::ring(3), 1, {bad, quad_agent(2), quad_agent(3)}),
                  ValidationError);
}

TEST_CASE("distributed updates match the stacked iteration") {
  Rng rng(21);
  std::vector<AllocationAgent> agents;
  for (int i = 0; i < 7; ++i) {
    const double a = rng.uniform(-5, 5), b = rng.uniform(0, 2), c = rng.uniform(0, 1);
    const double w = rng.uniform(-1, 1), d = rng.uniform(-2, 2);
    agents.push_back(scalar_agent([=](double y) { return catalog::logistic_value(a, b, c, y); },
                                  [=](double y) { return catalog::logistic_grad(a, b, c, y); }, w, d, -1, 1,
                                  0.25 * b * c * c));
  }
  const auto p = make_allocation_problem(NetworkGraph::random_connected(7, 0.3, 2), 1, agents);
  const auto stacked = allocation_saddle_problem(p);
  for (Method m : {Method::OGDA, Method::EG}) {
    CAPTURE(to_string(m));
    const double alpha = allocation_step_size(p, m, 0.0);
    auto s = make_allocation_state(p);
    Vector z = s.stacked(), z_prev = z;
    double dev = 0.0;
    for (int k = 0; k < 300; ++k) {
      s = m == Method::EG ? step_allocation_eg(p, s, alpha) : step_allocation_ogda(p, s, alpha);
      Vector next = m == Method::EG ? step_eg(stacked, z, alpha).next : step_ogda(stacked, z, z_prev, alpha);
      z_prev = z;
      z = next;
      dev = std::max(dev, max_abs(s.stacked(), z));
    }
    CHECK(dev <= 1e-12);
  }
}

TEST_CASE("three quadratic agents split the resource as y = c - mean(c)") {
  const auto inst = catalog::allocation_quadratics();
  const auto& ai = std::get<catalog::AllocationInstance>(inst.body);
  CHECK(max_abs(ai.kkt.y_star, vec({-1.0, 0.0, 1.0})) <= 1e-9);
  for (Method m : {Method::OGDA, Method::EG}) {
    harness::NetworkRunOptions o;
    o.method = m;
    o.alpha = allocation_step_size(ai.problem, m, 0.0);
    o.max_iters = 20000;
    const auto r = harness::run_allocation(ai, o);
    CHECK(r.converged);
    CHECK(r.primal_error <= 1e-8);
    CHECK(r.constraint_residual <= 1e-8);
    CHECK(r.dual_spread <= 1e-8);
  }
}

TEST_CASE("Psi vanishes in the y and lambda blocks at the KKT point") {
  const auto inst = catalog::allocation_quadratics();
  const auto& ai = std::get<catalog::AllocationInstance>(inst.body);
  const auto& p = ai.problem;
  const Vector psi = operator_psi(p, ai.kkt.y_star, ai.saddle.segment(3, 3), Vector::Constant(3, ai.kkt.mu[0]));
  CHECK(psi.head(3).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(psi.segment(3, 3).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(psi.tail(3).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("the saddle point is a fixed point and the schedule is irrelevant") {
  const auto inst = catalog::allocation_quadratics();
  const auto& ai = std::get<catalog::AllocationInstance>(inst.body);
  for (Method m : {Method::OGDA, Method::EG}) {
    const double alpha = allocation_step_size(ai.problem, m, 0.0);
    auto s = allocation_state_from_stacked(ai.problem, ai.saddle);
    auto t = make_allocation_state(ai.problem);
    auto u = t;
    for (int k = 0; k < 100; ++k) {
      if (m == Method::EG) {
        s = step_allocation_eg(ai.problem, s, alpha);
        t = step_allocation_eg(ai.problem, t, alpha);
        u = step_allocation_eg(ai.problem, u, alpha, {2, 0, 1});
      } else {
        s = step_allocation_ogda(ai.problem, s, alpha);
        t = step_allocation_ogda(ai.problem, t, alpha);
        u = step_allocation_ogda(ai.problem, u, alpha, {2, 0, 1});
      }
    }
    CHECK(max_abs(s.stacked(), ai.saddle) <= 1e-12);
    CHECK(t.stacked() == u.stacked());
  }
}
