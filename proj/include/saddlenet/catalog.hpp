#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "saddlenet/allocation.hpp"
#include "saddlenet/consensus.hpp"
#include "saddlenet/graph.hpp"
#include "saddlenet/oracle.hpp"
#include "saddlenet/saddle.hpp"
#include "saddlenet/solvers.hpp"

// Instance constructors: the two experiment instances and the small families
// with closed-form answers. Every random draw goes through Rng, so a spec
// (including its seed) determines the instance bit for bit.

namespace saddlenet::catalog {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct GraphSpec {
  std::string kind = "ring";  ///< ring | path | complete | random | edges
  double edge_prob = 0.3;     ///< random only
  std::uint64_t seed = 0;     ///< random only
  std::vector<NetworkGraph::Edge> edges;  ///< edges only

  NetworkGraph build(int n) const;
};

/// f(x, y) = x^T B y, B uniform in `entries`, on X = x_box^dim_x, Y = y_box^dim_y.
struct BilinearBoxSpec {
  int dim_x = 10;
  int dim_y = 10;
  Range entries{0.0, 5.0};
  Range x_box{-5.0, 5.0};
  Range y_box{-2.0, 2.0};
  double z0_fill = 10.0;
  /// Requested step; halved until it is below 1/(2 kappa).
  double alpha = 0.01;
};

/// f_i(s) = ||s - t_i||^2 on a common box; t_i defaults to i * 1 (i = 1..N).
struct ConsensusQuadraticSpec {
  int agents = 5;
  int m = 1;
  GraphSpec graph;
  std::vector<double> targets;  ///< one scalar per agent, applied to every coordinate
  Range box{-10.0, 10.0};
  std::vector<double> x0;  ///< one scalar per agent; empty: projection of 0
};

/// h_i(y) = a_i y + b_i log(1 + e^{c_i y}) on a box, scalar coupling W_i y = d_i.
struct AllocationLogisticSpec {
  int agents = 20;
  GraphSpec graph;
  Range box{-1.0, 1.0};
  Range a{-5.0, 5.0};
  Range b{0.0, 2.0};
  Range c{0.0, 1.0};
  Range w{-1.0, 1.0};
  Range d{-2.0, 2.0};
  int max_redraws = 100;
};

/// f(x, y) = x_quad/2 ||x||^2 + x^T B y - y_quad/2 ||y||^2 with explicit B.
/// `corrupt_grad` scales grad_x by (1 + corrupt_grad) without touching f.
struct CustomSaddleSpec {
  Matrix matrix;
  double x_quad = 0.0;
  double y_quad = 0.0;
  std::optional<Range> x_box;
  std::optional<Range> y_box;
  Vector z0;
  double corrupt_grad = 0.0;
};

/// h_i(y) = 1/2 (y - c_i)^2, scalar W_i and d_i, common box.
struct CustomAllocationSpec {
  GraphSpec graph;
  std::vector<double> c;
  std::vector<double> w;
  std::vector<double> d;
  Range box{-10.0, 10.0};
};

enum class Family { BilinearBox, ConsensusQuadratic, AllocationLogistic, Custom };

std::string to_string(Family f);

using FamilyParams =
    std::variant<BilinearBoxSpec, ConsensusQuadraticSpec, AllocationLogisticSpec, CustomSaddleSpec, CustomAllocationSpec>;

struct InstanceSpec {
  std::string name;
  std::uint64_t seed = 1;
  FamilyParams params;

  Family family() const;
};

/// Drawn or derived numbers, serialized next to outputs.
using Parameters = std::vector<std::pair<std::string, std::vector<double>>>;

struct SaddleInstance {
  SaddleProblem problem;
  Vector z0;
  std::optional<Reference> reference;
  double alpha = 0.0;  ///< recommended step (0: solver default)
};

struct ConsensusInstance {
  ConsensusProblem problem;
  std::vector<Vector> x0;
  Vector s_star;
  Vector saddle;  ///< certified (x*, v*)
};

struct AllocationInstance {
  AllocationProblem problem;
  oracle::KKTReference kkt;
  Vector saddle;  ///< certified (y*, a*, lambda*)
  int redraws = 0;
};

struct Instance {
  InstanceSpec spec;
  std::variant<SaddleInstance, ConsensusInstance, AllocationInstance> body;
  Parameters parameters;
  std::vector<std::string> notes;

  bool is_saddle() const { return std::holds_alternative<SaddleInstance>(body); }
  bool is_consensus() const { return std::holds_alternative<ConsensusInstance>(body); }
  bool is_allocation() const { return std::holds_alternative<AllocationInstance>(body); }
};

/// Builds and certifies the instance. ValidationError on bad parameters or
/// an infeasible allocation draw; InvariantError when a reference fails its
/// certificate.
Instance build(const InstanceSpec& spec);

// The experiment instances.
Instance example1_bilinear(std::uint64_t seed);
Instance example2_allocation(std::uint64_t seed);

// Small families with closed-form references.
Instance scalar_bilinear();
Instance quadratic_saddle();
Instance consensus_quadratics();
Instance allocation_quadratics();
/// Negative control: grad_x is off by 10% relative to f.
Instance corrupted_bilinear();

/// Logistic objective pieces, shared with tests.
double logistic_value(double a, double b, double c, double y);
double logistic_grad(double a, double b, double c, double y);

}  // namespace saddlenet::catalog
