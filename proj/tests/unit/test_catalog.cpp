#include "helpers.hpp"
#include "saddlenet/catalog.hpp"
#include "saddlenet/linalg.hpp"

using namespace saddlenet;
using namespace saddlenet::catalog;

namespace {

Vector parameter(const Instance& inst, const std::string& key) {
  for (const auto& [k, v] : inst.parameters)
    if (k == key) return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  FAIL("missing parameter " << key);
  return {};
}

}  // namespace

TEST_CASE("bilinear box instance") {
  const auto inst = example1_bilinear(1);
  const auto& s = std::get<SaddleInstance>(inst.body);
  CHECK(s.problem.dim_x == 10);
  CHECK(s.problem.dim_y == 10);
  CHECK(s.z0 == Vector::Constant(20, 10.0));
  CHECK(objective(s.problem, Vector::Zero(20)) == 0.0);
  CHECK(vi_residual(s.problem, Vector::Zero(20)) == 0.0);
  REQUIRE(s.reference.has_value());
  CHECK(s.reference->z.norm() == 0.0);
  CHECK(s.reference->f == 0.0);

  const Vector b = parameter(inst, "B");
  REQUIRE(b.size() == 100);
  CHECK(b.minCoeff() >= 0.0);
  CHECK(b.maxCoeff() < 5.0);
  const Matrix B = Eigen::Map<const Matrix>(b.data(), 10, 10);
  const double nb = Eigen::JacobiSVD<Matrix>(B).singularValues()(0);
  CHECK(s.problem.kappa() == doctest::Approx(2.0 * nb).epsilon(1e-9));
  CHECK(s.alpha < 1.0 / (2.0 * s.problem.kappa()));
}

TEST_CASE("bilinear box step halving is logged") {
  // Most draws have ||B|| > 25, where 0.01 breaks the OGDA bound.
  int halved = 0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto inst = example1_bilinear(seed);
    const auto& s = std::get<SaddleInstance>(inst.body);
    CHECK(s.alpha < 1.0 / (2.0 * s.problem.kappa()));
    if (s.alpha < 0.01) {
      ++halved;
      CHECK_FALSE(inst.notes.empty());
    } else {
      CHECK(s.alpha == 0.01);
    }
  }
  CHECK(halved > 0);
}

TEST_CASE("all-2.5 matrix has kappa 50") {
  InstanceSpec spec;
  spec.name = "flat";
  CustomSaddleSpec c;
  c.matrix = Matrix::Constant(10, 10, 2.5);
  c.z0 = Vector::Zero(20);
  spec.params = c;
  const auto inst = build(spec);
  CHECK(std::get<SaddleInstance>(inst.body).problem.kappa() == doctest::Approx(50.0).epsilon(1e-9));
}

TEST_CASE("same spec, same instance") {
  const auto a = example1_bilinear(7), b = example1_bilinear(7);
  CHECK(parameter(a, "B") == parameter(b, "B"));
  CHECK(parameter(a, "B") != parameter(example1_bilinear(8), "B"));

  const auto e = example2_allocation(3), f = example2_allocation(3);
  for (const char* k : {"a", "b", "c", "W", "d"}) CHECK(parameter(e, k) == parameter(f, k));
  CHECK(std::get<AllocationInstance>(e.body).kkt.y_star == std::get<AllocationInstance>(f.body).kkt.y_star);
}

TEST_CASE("logistic allocation instance") {
  const auto inst = example2_allocation(1);
  const auto& ai = std::get<AllocationInstance>(inst.body);
  CHECK(ai.problem.size() == 20);
  CHECK(ai.problem.graph.edges().size() == 20u);
  for (int i = 0; i < 20; ++i) CHECK(ai.problem.graph.degree(i) == 2);
  for (const auto& ag : ai.problem.agents) {
    const auto& box = std::get<ConvexSet::Box>(ag.set.variant());
    CHECK(box.lower[0] == -1.0);
    CHECK(box.upper[0] == 1.0);
  }
  const Vector a = parameter(inst, "a"), b = parameter(inst, "b"), c = parameter(inst, "c"), w = parameter(inst, "W"),
               d = parameter(inst, "d");
  CHECK(a.cwiseAbs().maxCoeff() <= 5.0);
  CHECK(b.minCoeff() >= 0.0);
  CHECK(b.maxCoeff() <= 2.0);
  CHECK(c.minCoeff() >= 0.0);
  CHECK(c.maxCoeff() <= 1.0);
  CHECK(w.cwiseAbs().maxCoeff() <= 1.0);
  CHECK(d.cwiseAbs().maxCoeff() <= 2.0);
  CHECK(ai.kkt.residuals.feasibility <= 1e-8);
  CHECK(vi_residual(allocation_saddle_problem(ai.problem), ai.saddle) <= 1e-8);
}

TEST_CASE("infeasible draws are retried, then rejected") {
  InstanceSpec spec;
  spec.name = "tight";
  AllocationLogisticSpec s;
  s.agents = 4;
  s.w = {0.1, 0.2};
  s.d = {1.5, 2.0};  // sum d >= 6 > sum |W| <= 0.8
  s.max_redraws = 3;
  spec.params = s;
  CHECK_THROWS_AS(build(spec), ValidationError);
}

TEST_CASE("small families") {
  const auto q = quadratic_saddle();
  CHECK(std::get<SaddleInstance>(q.body).reference->z.norm() == 0.0);
  const auto xy = scalar_bilinear();
  CHECK(std::get<SaddleInstance>(xy.body).problem.kappa() == doctest::Approx(2.0));
  const auto bad = corrupted_bilinear();
  const auto& p = std::get<SaddleInstance>(bad.body).problem;
  CHECK(gradient_error(p, 100, 1) > 1e-2);
}
