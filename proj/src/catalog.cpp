#include "saddlenet/catalog.hpp"

#include <cmath>
#include <sstream>

#include "saddlenet/linalg.hpp"
#include "saddlenet/rng.hpp"

namespace saddlenet::catalog {

namespace {

constexpr double kReferenceTol = 1e-8;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void check_range(const Range& r, const std::string& what) {
  if (!(r.lo <= r.hi)) throw ValidationError(what + ": empty range [" + fmt(r.lo) + ", " + fmt(r.hi) + "]");
}

std::vector<double> flatten(const Matrix& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  return out;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

// f = xq/2 |x|^2 + x^T B y - yq/2 |y|^2.
SaddleProblem quadratic_bilinear(std::string name, const Matrix& b, double xq, double yq, ConvexSet set_x,
                                 ConvexSet set_y, double corrupt = 0.0) {
  if (xq < 0.0 || yq < 0.0) throw ValidationError(name + ": x_quad and y_quad must be nonnegative");
  SaddleProblem p;
  p.name = std::move(name);
  p.dim_x = b.rows();
  p.dim_y = b.cols();
  p.set_x = std::move(set_x);
  p.set_y = std::move(set_y);
  p.value = [b, xq, yq](const Vector& x, const Vector& y) {
    return 0.5 * xq * x.squaredNorm() + x.dot(b * y) - 0.5 * yq * y.squaredNorm();
  };
  const double scale = 1.0 + corrupt;
  p.grad_x = [b, xq, scale](const Vector& x, const Vector& y) -> Vector { return scale * (xq * x + b * y); };
  p.grad_y = [b, yq](const Vector& x, const Vector& y) -> Vector { return b.transpose() * x - yq * y; };
  const double nb = b.size() == 0 ? 0.0 : spectral_norm(b);
  p.lipschitz = {xq, nb, nb, yq};
  p.validate();
  return p;
}

// z* = P(0) certified by the natural residual; F(0) = 0 for these problems.
std::optional<Reference> zero_reference(const SaddleProblem& p) {
  const Vector z = p.feasible_set().project(Vector::Zero(p.dim()));
  if (vi_residual(p, z) > kReferenceTol) return std::nullopt;
  return make_reference(p, z);
}

ConvexSet box_or_space(const std::optional<Range>& r, Eigen::Index dim, const std::string& what) {
  if (!r) return ConvexSet::whole_space(dim);
  check_range(*r, what);
  return ConvexSet::uniform_box(dim, r->lo, r->hi);
}

Instance build_bilinear(const InstanceSpec& spec, const BilinearBoxSpec& s) {
  if (s.dim_x < 1 || s.dim_y < 1) throw ValidationError("bilinear_box: dimensions must be positive");
  check_range(s.entries, "bilinear_box entries");
  check_range(s.x_box, "bilinear_box x_box");
  check_range(s.y_box, "bilinear_box y_box");
  if (!(s.alpha > 0.0)) throw ValidationError("bilinear_box: alpha must be positive");
  Rng rng(spec.seed);
  Matrix b(s.dim_x, s.dim_y);
  for (int i = 0; i < s.dim_x; ++i)
    for (int j = 0; j < s.dim_y; ++j) b(i, j) = rng.uniform(s.entries.lo, s.entries.hi);

  Instance inst;
  inst.spec = spec;
  SaddleInstance body;
  body.problem = quadratic_bilinear(spec.name, b, 0.0, 0.0, ConvexSet::uniform_box(s.dim_x, s.x_box.lo, s.x_box.hi),
                                    ConvexSet::uniform_box(s.dim_y, s.y_box.lo, s.y_box.hi));
  body.z0 = Vector::Constant(s.dim_x + s.dim_y, s.z0_fill);
  body.reference = zero_reference(body.problem);
  const double bound = step_bound(Method::OGDA, body.problem.kappa());
  double alpha = s.alpha;
  int halvings = 0;
  while (alpha >= bound) {
    alpha *= 0.5;
    ++halvings;
  }
  body.alpha = alpha;
  if (halvings > 0) {
    inst.notes.push_back("alpha " + fmt(s.alpha) + " violates 1/(2 kappa) = " + fmt(bound) + "; halved " +
                         std::to_string(halvings) + " time(s) to " + fmt(alpha));
  }
  inst.parameters = {{"B", flatten(b)},
                     {"spectral_norm_B", {body.problem.lipschitz.l_xy}},
                     {"kappa", {body.problem.kappa()}},
                     {"alpha", {alpha}}};
  inst.body = std::move(body);
  return inst;
}

Instance build_consensus(const InstanceSpec& spec, const ConsensusQuadraticSpec& s) {
  if (s.agents < 1 || s.m < 1) throw ValidationError("consensus_quadratic: agents and m must be positive");
  check_range(s.box, "consensus_quadratic box");
  std::vector<double> targets = s.targets;
  if (targets.empty()) {
    for (int i = 1; i <= s.agents; ++i) targets.push_back(i);
  }
  if (static_cast<int>(targets.size()) != s.agents) {
    throw ValidationError("consensus_quadratic: " + std::to_string(targets.size()) + " targets for " +
                          std::to_string(s.agents) + " agents");
  }
  if (!s.x0.empty() && static_cast<int>(s.x0.size()) != s.agents) {
    throw ValidationError("consensus_quadratic: x0 needs one value per agent");
  }
  const int m = s.m;
  std::vector<ConsensusAgent> agents;
  for (double t : targets) {
    ConsensusAgent a;
    const Vector target = Vector::Constant(m, t);
    a.objective = [target](const Vector& p) { return (p - target).squaredNorm(); };
    a.gradient = [target](const Vector& p) -> Vector { return 2.0 * (p - target); };
    a.set = ConvexSet::uniform_box(m, s.box.lo, s.box.hi);
    a.lipschitz = 2.0;
    agents.push_back(std::move(a));
  }
  ConsensusInstance body{make_consensus_problem(s.graph.build(s.agents), m, std::move(agents)), {}, {}, {}};
  for (int i = 0; i < s.agents; ++i) {
    const Vector start = s.x0.empty() ? Vector::Zero(m) : Vector::Constant(m, s.x0[i]);
    body.x0.push_back(body.problem.agents[i].set.project(start));
  }
  body.s_star = oracle::solve_consensus_reference(body.problem);
  body.saddle = oracle::consensus_saddle_reference(body.problem, body.s_star);

  Instance inst;
  inst.spec = spec;
  inst.parameters = {{"targets", targets},
                     {"kappa_c", {body.problem.kappa_c}},
                     {"s_star", to_std(body.s_star)},
                     {"v_star", to_std(body.saddle.tail(body.problem.stacked_dim()))}};
  inst.body = std::move(body);
  return inst;
}

AllocationInstance certify_allocation(AllocationProblem problem) {
  AllocationInstance body;
  body.kkt = oracle::solve_allocation_kkt(problem);
  body.saddle = oracle::allocation_saddle_reference(problem, body.kkt);
  body.problem = std::move(problem);
  return body;
}

AllocationAgent logistic_agent(double a, double b, double c, double w, double d, const Range& box) {
  AllocationAgent ag;
  ag.objective = [a, b, c](const Vector& y) { return logistic_value(a, b, c, y[0]); };
  ag.gradient = [a, b, c](const Vector& y) -> Vector { return Vector::Constant(1, logistic_grad(a, b, c, y[0])); };
  ag.set = ConvexSet::uniform_box(1, box.lo, box.hi);
  ag.W = Matrix::Constant(1, 1, w);
  ag.d = Vector::Constant(1, d);
  ag.lipschitz = b * c * c / 4.0;
  return ag;
}

Instance build_logistic(const InstanceSpec& spec, const AllocationLogisticSpec& s) {
  if (s.agents < 1) throw ValidationError("allocation_logistic: agents must be positive");
  for (const auto& [r, what] : {std::pair{s.box, "box"}, {s.a, "a"}, {s.b, "b"}, {s.c, "c"}, {s.w, "W"}, {s.d, "d"}}) {
    check_range(r, std::string("allocation_logistic ") + what);
  }
  if (s.b.lo < 0.0) throw ValidationError("allocation_logistic: b must be nonnegative for convexity");
  Rng rng(spec.seed);
  const int n = s.agents;
  Vector a = rng.uniform_vector(n, s.a.lo, s.a.hi);
  Vector b = rng.uniform_vector(n, s.b.lo, s.b.hi);
  Vector c = rng.uniform_vector(n, s.c.lo, s.c.hi);
  Vector w = rng.uniform_vector(n, s.w.lo, s.w.hi);
  Vector d = rng.uniform_vector(n, s.d.lo, s.d.hi);
  const NetworkGraph graph = s.graph.build(n);

  for (int redraw = 0;; ++redraw) {
    std::vector<AllocationAgent> agents;
    for (int i = 0; i < n; ++i) agents.push_back(logistic_agent(a[i], b[i], c[i], w[i], d[i], s.box));
    AllocationProblem problem = make_allocation_problem(graph, 1, std::move(agents));
    try {
      AllocationInstance body = certify_allocation(std::move(problem));
      body.redraws = redraw;
      Instance inst;
      inst.spec = spec;
      if (redraw > 0) inst.notes.push_back("d re-drawn " + std::to_string(redraw) + " time(s) for feasibility");
      inst.parameters = {{"a", to_std(a)},
                         {"b", to_std(b)},
                         {"c", to_std(c)},
                         {"W", to_std(w)},
                         {"d", to_std(d)},
                         {"kappa_s", {body.problem.kappa_s}},
                         {"y_star", to_std(body.kkt.y_star)},
                         {"mu", to_std(body.kkt.mu)},
                         {"objective_star", {body.kkt.objective}}};
      inst.body = std::move(body);
      return inst;
    } catch (const ValidationError&) {
      if (redraw + 1 > s.max_redraws) {
        throw ValidationError("allocation_logistic: still infeasible after " + std::to_string(s.max_redraws) +
                              " re-draws of d");
      }
      d = rng.uniform_vector(n, s.d.lo, s.d.hi);
    }
  }
}

Instance build_custom_saddle(const InstanceSpec& spec, const CustomSaddleSpec& s) {
  if (s.matrix.size() == 0) throw ValidationError("custom saddle: matrix must be nonempty");
  const Eigen::Index nx = s.matrix.rows(), ny = s.matrix.cols();
  SaddleInstance body;
  body.problem = quadratic_bilinear(spec.name, s.matrix, s.x_quad, s.y_quad, box_or_space(s.x_box, nx, "x_box"),
                                    box_or_space(s.y_box, ny, "y_box"), s.corrupt_grad);
  if (s.z0.size() == 0) {
    body.z0 = Vector::Ones(nx + ny);
  } else if (s.z0.size() == nx + ny) {
    body.z0 = s.z0;
  } else {
    throw ValidationError("custom saddle: z0 must have " + std::to_string(nx + ny) + " entries");
  }
  body.reference = zero_reference(body.problem);
  Instance inst;
  inst.spec = spec;
  inst.parameters = {{"B", flatten(s.matrix)},
                     {"x_quad", {s.x_quad}},
                     {"y_quad", {s.y_quad}},
                     {"kappa", {body.problem.kappa()}}};
  if (s.corrupt_grad != 0.0) {
    inst.parameters.push_back({"corrupt_grad", {s.corrupt_grad}});
    inst.notes.push_back("grad_x deliberately inconsistent with f (negative control)");
  }
  inst.body = std::move(body);
  return inst;
}

Instance build_custom_allocation(const InstanceSpec& spec, const CustomAllocationSpec& s) {
  const std::size_t n = s.c.size();
  if (n == 0) throw ValidationError("custom allocation: c must be nonempty");
  if (s.w.size() != n || s.d.size() != n) throw ValidationError("custom allocation: c, w and d must have equal length");
  check_range(s.box, "custom allocation box");
  std::vector<AllocationAgent> agents;
  for (std::size_t i = 0; i < n; ++i) {
    AllocationAgent ag;
    const double ci = s.c[i];
    ag.objective = [ci](const Vector& y) { return 0.5 * (y[0] - ci) * (y[0] - ci); };
    ag.gradient = [ci](const Vector& y) -> Vector { return Vector::Constant(1, y[0] - ci); };
    ag.set = ConvexSet::uniform_box(1, s.box.lo, s.box.hi);
    ag.W = Matrix::Constant(1, 1, s.w[i]);
    ag.d = Vector::Constant(1, s.d[i]);
    ag.lipschitz = 1.0;
    agents.push_back(std::move(ag));
  }
  AllocationInstance body =
      certify_allocation(make_allocation_problem(s.graph.build(static_cast<int>(n)), 1, std::move(agents)));
  Instance inst;
  inst.spec = spec;
  inst.parameters = {{"c", s.c},
                     {"W", s.w},
                     {"d", s.d},
                     {"kappa_s", {body.problem.kappa_s}},
                     {"y_star", to_std(body.kkt.y_star)},
                     {"mu", to_std(body.kkt.mu)},
                     {"objective_star", {body.kkt.objective}}};
  inst.body = std::move(body);
  return inst;
}

}  // namespace

NetworkGraph GraphSpec::build(int n) const {
  if (kind == "ring") return NetworkGraph::ring(n);
  if (kind == "path") return NetworkGraph::path(n);
  if (kind == "complete") return NetworkGraph::complete(n);
  if (kind == "random") return NetworkGraph::random_connected(n, edge_prob, seed);
  if (kind == "edges") return NetworkGraph::from_edges(n, edges);
  throw ValidationError("unknown graph kind '" + kind + "' (expected ring, path, complete, random or edges)");
}

std::string to_string(Family f) {
  switch (f) {
    case Family::BilinearBox:
      return "bilinear_box";
    case Family::ConsensusQuadratic:
      return "consensus_quadratic";
    case Family::AllocationLogistic:
      return "allocation_logistic";
    case Family::Custom:
      return "custom";
  }
  return "custom";
}

Family InstanceSpec::family() const {
  switch (params.index()) {
    case 0:
      return Family::BilinearBox;
    case 1:
      return Family::ConsensusQuadratic;
    case 2:
      return Family::AllocationLogistic;
    default:
      return Family::Custom;
  }
}

Instance build(const InstanceSpec& spec) {
  return std::visit(
      [&](const auto& p) -> Instance {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, BilinearBoxSpec>) return build_bilinear(spec, p);
        if constexpr (std::is_same_v<T, ConsensusQuadraticSpec>) return build_consensus(spec, p);
        if constexpr (std::is_same_v<T, AllocationLogisticSpec>) return build_logistic(spec, p);
        if constexpr (std::is_same_v<T, CustomSaddleSpec>) return build_custom_saddle(spec, p);
        if constexpr (std::is_same_v<T, CustomAllocationSpec>) return build_custom_allocation(spec, p);
      },
      spec.params);
}

Instance example1_bilinear(std::uint64_t seed) { return build({"example1", seed, BilinearBoxSpec{}}); }

Instance example2_allocation(std::uint64_t seed) { return build({"example2", seed, AllocationLogisticSpec{}}); }

Instance scalar_bilinear() {
  CustomSaddleSpec s;
  s.matrix = Matrix::Ones(1, 1);
  return build({"bilinear", 0, s});
}

Instance quadratic_saddle() {
  CustomSaddleSpec s;
  s.matrix = Matrix::Zero(1, 1);
  s.x_quad = 1.0;
  s.y_quad = 1.0;
  return build({"quadratic", 0, s});
}

Instance consensus_quadratics() { return build({"consensus", 0, ConsensusQuadraticSpec{}}); }

Instance allocation_quadratics() {
  CustomAllocationSpec s;
  s.c = {1.0, 2.0, 3.0};
  s.w = {1.0, 1.0, 1.0};
  s.d = {0.0, 0.0, 0.0};
  return build({"allocation3", 0, s});
}

Instance corrupted_bilinear() {
  CustomSaddleSpec s;
  s.matrix.resize(2, 2);
  s.matrix << 1.0, 2.0, -1.0, 0.5;
  s.x_box = Range{-1.0, 1.0};
  s.y_box = Range{-1.0, 1.0};
  s.z0 = Vector::Constant(4, 0.5);
  s.corrupt_grad = 0.1;
  return build({"corrupted", 0, s});
}

double logistic_value(double a, double b, double c, double y) {
  const double t = c * y;
  // log(1 + e^t) without overflow
  const double softplus = std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
  return a * y + b * softplus;
}

double logistic_grad(double a, double b, double c, double y) {
  const double t = c * y;
  const double sigma = t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
  return a + b * c * sigma;
}

}  // namespace saddlenet::catalog
