#include <cmath>
#include <functional>
#include <utility>

#include "helpers.hpp"
#include "saddlenet/catalog.hpp"
#include "saddlenet/oracle.hpp"

using namespace saddlenet;
using testing::max_abs;
using testing::vec;

namespace {

struct Scalar {
  std::function<double(double)> h, dh;
  double w, d, lo, hi;
};

AllocationProblem scalar_problem(const std::vector<Scalar>& parts) {
  std::vector<AllocationAgent> agents;
  for (const auto& s : parts) {
    AllocationAgent a;
    a.objective = [h = s.h](const Vector& y) { return h(y[0]); };
    a.gradient = [dh = s.dh](const Vector& y) -> Vector { return Vector::Constant(1, dh(y[0])); };
    a.set = ConvexSet::uniform_box(1, s.lo, s.hi);
    a.W = Matrix::Constant(1, 1, s.w);
    a.d = Vector::Constant(1, s.d);
    a.lipschitz = 1.0;
    agents.push_back(std::move(a));
  }
  return make_allocation_problem(NetworkGraph::path(static_cast<int>(parts.size())), 1, std::move(agents));
}

ConsensusAgent quad(double t, double lo, double hi) {
  return {[t](const Vector& s) { return (s[0] - t) * (s[0] - t); },
          [t](const Vector& s) -> Vector { return Vector::Constant(1, 2.0 * (s[0] - t)); },
          ConvexSet::uniform_box(1, lo, hi), 2.0};
}

}  // namespace

TEST_CASE("KKT: three quadratics") {
  std::vector<Scalar> parts;
  for (double c : {1.0, 2.0, 3.0})
    parts.push_back({[c](double y) { return 0.5 * (y - c) * (y - c); }, [c](double y) { return y - c; }, 1, 0, -10, 10});
  const auto ref = oracle::solve_allocation_kkt(scalar_problem(parts));
  CHECK(max_abs(ref.y_star, vec({-1.0, 0.0, 1.0})) <= 1e-10);
  CHECK(ref.mu[0] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(ref.objective == doctest::Approx(3 * 0.5 * 4).epsilon(1e-10));
  CHECK(ref.residuals.feasibility <= 1e-10);
}

TEST_CASE("KKT: linear costs end on box faces") {
  std::vector<Scalar> parts;
  for (double g : {1.0, 2.0, 3.0})
    parts.push_back({[g](double y) { return g * y; }, [g](double) { return g; }, 1, g == 1.0 ? 1.0 : 0.0, -1, 1});
  const auto ref = oracle::solve_allocation_kkt(scalar_problem(parts));
  // Sum y = 1 with y_i in {-1, 1}: the most expensive agent goes to -1.
  CHECK(max_abs(ref.y_star, vec({1.0, 1.0, -1.0})) <= 1e-9);
  CHECK(ref.mu[0] > -3.0 - 1e-9);
  CHECK(ref.mu[0] < -2.0 + 1e-9);
}

TEST_CASE("KKT: agreement with a brute-force grid on small logistic instances") {
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    CAPTURE(trial);
    std::vector<Scalar> parts;
    double total_d = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double a = rng.uniform(-5, 5), b = rng.uniform(0, 2), c = rng.uniform(0, 1);
      const double w = rng.uniform(0.3, 1.0), d = rng.uniform(-0.5, 0.5);
      total_d += d;
      parts.push_back({[=](double y) { return catalog::logistic_value(a, b, c, y); },
                       [=](double y) { return catalog::logistic_grad(a, b, c, y); }, w, d, -1, 1});
    }
    const auto ref = oracle::solve_allocation_kkt(scalar_problem(parts));

    // Eliminate y3 through the coupling constraint and minimize the convex
    // reduced objective by nested ternary search over the exact feasible ranges.
    const auto y3_of = [&](double y1, double y2) { return (total_d - parts[0].w * y1 - parts[1].w * y2) / parts[2].w; };
    const auto y2_range = [&](double y1) {
      // -1 <= y3 <= 1  <=>  (total_d - w1 y1 - w3) / w2 <= y2 <= (total_d - w1 y1 + w3) / w2
      const double r = total_d - parts[0].w * y1;
      return std::pair{std::max(-1.0, (r - parts[2].w) / parts[1].w), std::min(1.0, (r + parts[2].w) / parts[1].w)};
    };
    const auto ternary = [](double lo, double hi, const std::function<double(double)>& g) {
      for (int it = 0; it < 200; ++it) {
        const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
        if (g(m1) <= g(m2))
          hi = m2;
        else
          lo = m1;
      }
      return g(0.5 * (lo + hi));
    };
    const auto inner = [&](double y1) {
      const auto [lo, hi] = y2_range(y1);
      if (lo > hi) return 1e300;
      return ternary(lo, hi, [&](double y2) { return parts[0].h(y1) + parts[1].h(y2) + parts[2].h(y3_of(y1, y2)); });
    };
    double y1_lo = -1, y1_hi = 1;
    while (y2_range(y1_lo).first > y2_range(y1_lo).second) y1_lo += 1e-6;
    while (y2_range(y1_hi).first > y2_range(y1_hi).second) y1_hi -= 1e-6;
    const double best = ternary(y1_lo, y1_hi, inner);
    const Vector y = ref.y_star;
    CHECK(std::abs(parts[0].w * y[0] + parts[1].w * y[1] + parts[2].w * y[2] - total_d) <= 1e-10);
    CHECK(ref.objective <= best + 1e-9);
    CHECK(ref.objective >= best - 1e-9);
    CHECK(ref.residuals.stationarity <= 1e-8);
  }
}

TEST_CASE("KKT: infeasible and unsupported inputs") {
  std::vector<Scalar> parts;
  for (int i = 0; i < 2; ++i) parts.push_back({[](double y) { return y * y; }, [](double y) { return 2 * y; }, 1, 5, -1, 1});
  CHECK_THROWS_AS(oracle::solve_allocation_kkt(scalar_problem(parts)), ValidationError);

  auto p = scalar_problem({{[](double y) { return y * y; }, [](double y) { return 2 * y; }, 1, 0, -1, 1},
                           {[](double y) { return y * y; }, [](double y) { return 2 * y; }, 1, 0, -1, 1}});
  p.agents[0].set = ConvexSet::ball(Vector::Zero(1), 1.0);
  CHECK_THROWS_AS(oracle::solve_allocation_kkt(p), ContractError);
}

TEST_CASE("consensus reference") {
  std::vector<ConsensusAgent> five;
  for (int i = 1; i <= 5; ++i) five.push_back(quad(i, -10, 10));
  const auto p = make_consensus_problem(NetworkGraph::ring(5), 1, five);
  CHECK(oracle::solve_consensus_reference(p)[0] == doctest::Approx(3.0).epsilon(1e-12));

  // Single agent: projected minimization of (s - 5)^2 over [-1, 1].
  const auto single = make_consensus_problem(NetworkGraph::path(1), 1, {quad(5, -1, 1)});
  CHECK(oracle::solve_consensus_reference(single)[0] == 1.0);

  // Constant objectives: the box projection of 0.
  ConsensusAgent flat{[](const Vector&) { return 4.0; }, [](const Vector&) -> Vector { return Vector::Zero(1); },
                      ConvexSet::uniform_box(1, 1, 2), 0.0};
  const auto constant = make_consensus_problem(NetworkGraph::path(2), 1, {flat, flat});
  CHECK(oracle::solve_consensus_reference(constant)[0] == 1.0);

  // Intersection of the boxes decides: targets 1..3 on [2.5, 10] x [-10, 10] -> 2.5.
  const auto clipped =
      make_consensus_problem(NetworkGraph::ring(3), 1, {quad(1, 2.5, 10), quad(2, -10, 10), quad(3, -10, 10)});
  CHECK(oracle::solve_consensus_reference(clipped)[0] == doctest::Approx(2.5).epsilon(1e-12));
  const Vector saddle = oracle::consensus_saddle_reference(clipped, vec({2.5}));
  CHECK(vi_residual(consensus_saddle_problem(clipped), saddle) <= 1e-8);
}

TEST_CASE("Laplacian solve") {
  const auto g = NetworkGraph::random_connected(8, 0.3, 4);
  Rng rng(2);
  Vector r = rng.uniform_vector(16, -1, 1);
  for (int c = 0; c < 2; ++c) {
    double mean = 0;
    for (int i = 0; i < 8; ++i) mean += r[2 * i + c] / 8;
    for (int i = 0; i < 8; ++i) r[2 * i + c] -= mean;
  }
  const Vector u = oracle::solve_laplacian(g, 2, r);
  CHECK(max_abs(g.laplacian_apply(u, 2), r) <= 1e-12);
  CHECK(std::abs(u[0] + u[2] + u[4] + u[6] + u[8] + u[10] + u[12] + u[14]) <= 1e-12);
}

TEST_CASE("finite differences") {
  Rng rng(9);
  std::vector<Vector> pts;
  for (int i = 0; i < 100; ++i) pts.push_back(rng.uniform_vector(4, -3, 3));
  const auto half = [](const Vector& p) { return 0.5 * p.squaredNorm(); };
  const auto ok = oracle::finite_diff_check(half, [](const Vector& p) -> Vector { return p; }, pts, 1e-5);
  CHECK(ok.passed);
  CHECK(ok.max_rel_error <= 1e-8);
  const auto bad = oracle::finite_diff_check(half, [](const Vector& p) -> Vector { return 1.01 * p; }, pts, 1e-5);
  CHECK_FALSE(bad.passed);

  CHECK(catalog::logistic_grad(1, 2, 1, 0) == doctest::Approx(2.0).epsilon(1e-15));
  const auto lv = [](const Vector& p) { return catalog::logistic_value(1.5, 2, 0.7, p[0]); };
  const auto lg = [](const Vector& p) -> Vector { return Vector::Constant(1, catalog::logistic_grad(1.5, 2, 0.7, p[0])); };
  std::vector<Vector> ys;
  for (int i = 0; i <= 100; ++i) ys.push_back(Vector::Constant(1, -1 + 0.02 * i));
  CHECK(oracle::finite_diff_check(lv, lg, ys, 1e-5).passed);
  // Large arguments must not overflow.
  CHECK(std::isfinite(catalog::logistic_value(0, 1, 1, 800)));
  CHECK(catalog::logistic_value(0, 1, 1, 800) == doctest::Approx(800.0));
}
