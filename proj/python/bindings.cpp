#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "saddlenet/catalog.hpp"
#include "saddlenet/harness.hpp"
#include "saddlenet/linalg.hpp"
#include "saddlenet/trace_io.hpp"

namespace py = pybind11;
using namespace saddlenet;

namespace {

// The stacked saddle problem behind any instance (networked ones in
// centralized form) and its certified solution.
struct Stacked {
  SaddleProblem problem;
  Vector z0;
  std::optional<Vector> z_star;
};

Stacked stacked_of(const catalog::Instance& inst) {
  if (const auto* s = std::get_if<catalog::SaddleInstance>(&inst.body)) {
    return {s->problem, s->z0, s->reference ? std::optional<Vector>(s->reference->z) : std::nullopt};
  }
  if (const auto* c = std::get_if<catalog::ConsensusInstance>(&inst.body)) {
    return {consensus_saddle_problem(c->problem), make_consensus_state(c->problem, c->x0).stacked(), c->saddle};
  }
  const auto& a = std::get<catalog::AllocationInstance>(inst.body);
  return {allocation_saddle_problem(a.problem), make_allocation_state(a.problem).stacked(), a.saddle};
}

const char* kind_of(const catalog::Instance& inst) {
  return inst.is_saddle() ? "saddle" : inst.is_consensus() ? "consensus" : "allocation";
}

harness::ExperimentConfig resolve(const std::optional<std::string>& preset, const std::optional<std::string>& config,
                                  std::optional<std::uint64_t> seed, std::optional<double> alpha,
                                  std::optional<long> iters, std::optional<std::string> out,
                                  std::optional<std::vector<std::string>> methods) {
  if (preset.has_value() == config.has_value()) throw ValidationError("give exactly one of preset= or config=");
  auto cfg = preset ? harness::preset(*preset) : harness::parse_config(*config, "<python>");
  if (seed) cfg.instance.seed = *seed;
  if (alpha) {
    cfg.alpha = *alpha;
    if (auto* b = std::get_if<catalog::BilinearBoxSpec>(&cfg.instance.params)) b->alpha = *alpha;
  }
  if (iters) {
    cfg.iters = *iters;
    cfg.compare = false;
  }
  if (out) cfg.out_dir = *out;
  if (methods) {
    cfg.methods.clear();
    for (const auto& m : *methods) cfg.methods.push_back(parse_method(m));
    if (cfg.methods.empty()) throw ValidationError("methods list is empty");
  }
  return cfg;
}

py::dict trace_dict(const RunTrace& t) {
  std::vector<int> iter;
  std::vector<double> f, res, gap, bound;
  for (const auto& r : t.records) {
    iter.push_back(r.iter);
    f.push_back(r.f_value);
    res.push_back(r.vi_residual);
    gap.push_back(r.ergodic_gap.value_or(std::nan("")));
    bound.push_back(r.rate_bound.value_or(std::nan("")));
  }
  py::dict d;
  d["method"] = to_string(t.method);
  d["alpha"] = t.alpha;
  d["kappa"] = t.kappa;
  d["iterations"] = t.iterations;
  d["grad_calls"] = t.grad_calls;
  d["converged"] = t.converged;
  d["final_residual"] = t.final_residual;
  d["z"] = t.final_z;
  d["iter"] = iter;
  d["f_value"] = f;
  d["vi_residual"] = res;
  d["ergodic_gap"] = gap;
  d["rate_bound"] = bound;
  return d;
}

}  // namespace

PYBIND11_MODULE(_saddlenet, m) {
  m.doc() = "Projected GDA / OGDA / extra-gradient saddle-point solvers and distributed network simulations";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_ArithmeticError);
  py::register_exception<InvariantError>(m, "InvariantError", PyExc_AssertionError);

  py::class_<ConvexSet>(m, "ConvexSet")
      .def_static("whole_space", &ConvexSet::whole_space, py::arg("dim"))
      .def_static("box", &ConvexSet::box, py::arg("lower"), py::arg("upper"))
      .def_static("uniform_box", &ConvexSet::uniform_box, py::arg("dim"), py::arg("lo"), py::arg("hi"))
      .def_static("ball", &ConvexSet::ball, py::arg("center"), py::arg("radius"))
      .def_static("product", &ConvexSet::product, py::arg("factors"))
      .def_property_readonly("dim", &ConvexSet::dim)
      .def("project", &ConvexSet::project, py::arg("p"))
      .def("contains", &ConvexSet::contains, py::arg("p"), py::arg("tol") = kMembershipTol);

  m.def("spectral_norm", [](const Matrix& b) { return spectral_norm(b); }, py::arg("B"));
  m.def(
      "lambda_max",
      [](int n, const std::vector<std::pair<int, int>>& edges) { return lambda_max(NetworkGraph::from_edges(n, edges)); },
      py::arg("n"), py::arg("edges"), "Largest Laplacian eigenvalue of an undirected graph.");
  m.def("step_bound", [](const std::string& method, double kappa) { return step_bound(parse_method(method), kappa); },
        py::arg("method"), py::arg("kappa"));

  py::class_<catalog::Instance>(m, "Instance")
      .def_property_readonly("name", [](const catalog::Instance& i) { return i.spec.name; })
      .def_property_readonly("seed", [](const catalog::Instance& i) { return i.spec.seed; })
      .def_property_readonly("kind", &kind_of)
      .def_property_readonly("notes", [](const catalog::Instance& i) { return i.notes; })
      .def_property_readonly("parameters",
                             [](const catalog::Instance& i) {
                               py::dict d;
                               for (const auto& [k, v] : i.parameters) d[py::str(k)] = v;
                               return d;
                             })
      .def_property_readonly("kappa", [](const catalog::Instance& i) { return stacked_of(i).problem.kappa(); })
      .def_property_readonly("dim", [](const catalog::Instance& i) { return stacked_of(i).problem.dim(); })
      .def_property_readonly("z0", [](const catalog::Instance& i) { return stacked_of(i).z0; })
      .def_property_readonly("z_star", [](const catalog::Instance& i) { return stacked_of(i).z_star; })
      .def_property_readonly("alpha",
                             [](const catalog::Instance& i) {
                               const auto* s = std::get_if<catalog::SaddleInstance>(&i.body);
                               return s ? s->alpha : 0.0;
                             })
      .def("objective", [](const catalog::Instance& i, const Vector& z) { return objective(stacked_of(i).problem, z); })
      .def("operator", [](const catalog::Instance& i, const Vector& z) { return operator_F(stacked_of(i).problem, z); },
           "F(z) = (grad_x f, -grad_y f) of the (stacked) saddle problem.")
      .def("vi_residual",
           [](const catalog::Instance& i, const Vector& z) { return vi_residual(stacked_of(i).problem, z); })
      .def("project", [](const catalog::Instance& i, const Vector& z) {
        return stacked_of(i).problem.feasible_set().project(z);
      })
      .def(
          "step",
          [](const catalog::Instance& i, const std::string& method, const Vector& z, double alpha,
             std::optional<Vector> z_prev) -> Vector {
            const auto s = stacked_of(i);
            switch (parse_method(method)) {
              case Method::GDA:
                return step_gda(s.problem, z, alpha);
              case Method::OGDA:
                return step_ogda(s.problem, z, z_prev.value_or(z), alpha);
              case Method::EG:
                return step_eg(s.problem, z, alpha).next;
            }
            return z;
          },
          py::arg("method"), py::arg("z"), py::arg("alpha"), py::arg("z_prev") = py::none())
      .def(
          "run",
          [](const catalog::Instance& i, const std::string& method, double alpha, int iters, double stop_tol,
             std::optional<Vector> z0) {
            const auto s = stacked_of(i);
            SolverConfig cfg;
            cfg.method = parse_method(method);
            cfg.step_size = alpha;
            cfg.max_iters = iters;
            cfg.stop_tol = stop_tol;
            std::optional<Reference> ref;
            if (s.z_star) ref = make_reference(s.problem, *s.z_star);
            RunTrace t;
            {
              py::gil_scoped_release release;
              t = run(s.problem, cfg, z0.value_or(s.z0), ref);
            }
            return trace_dict(t);
          },
          py::arg("method"), py::arg("alpha") = 0.0, py::arg("iters") = 1000, py::arg("stop_tol") = 1e-10,
          py::arg("z0") = py::none(),
          "Centralized run on the stacked problem; returns the final iterate and per-iteration series.")
      .def(
          "run_network",
          [](const catalog::Instance& i, const std::string& method, double alpha, long iters, double stop_tol) {
            harness::NetworkRunOptions o;
            o.method = parse_method(method);
            o.max_iters = iters;
            o.stop_tol = stop_tol;
            o.record_every = static_cast<int>(std::max(1L, iters));
            harness::NetworkRunResult r;
            if (const auto* c = std::get_if<catalog::ConsensusInstance>(&i.body)) {
              o.alpha = consensus_step_size(c->problem, o.method, alpha);
              py::gil_scoped_release release;
              r = harness::run_consensus(*c, o);
            } else if (const auto* a = std::get_if<catalog::AllocationInstance>(&i.body)) {
              o.alpha = allocation_step_size(a->problem, o.method, alpha);
              py::gil_scoped_release release;
              r = harness::run_allocation(*a, o);
            } else {
              throw ValidationError("run_network needs a consensus or allocation instance");
            }
            py::dict d;
            d["method"] = to_string(r.method);
            d["alpha"] = r.alpha;
            d["iterations"] = r.iterations;
            d["grad_calls"] = r.grad_calls;
            d["converged"] = r.converged;
            d["vi_residual"] = r.vi_residual;
            d["primal_error"] = r.primal_error;
            d["constraint_residual"] = r.constraint_residual;
            d["objective"] = r.objective;
            d["dual_spread"] = r.dual_spread;
            d["z"] = r.final_stacked;
            return d;
          },
          py::arg("method"), py::arg("alpha") = 0.0, py::arg("iters") = 100000, py::arg("stop_tol") = 1e-10,
          "Per-agent simulation with message exchange between neighbors.")
      .def("kkt", [](const catalog::Instance& i) {
        const auto* a = std::get_if<catalog::AllocationInstance>(&i.body);
        if (!a) throw ValidationError("kkt needs an allocation instance");
        py::dict d;
        d["y_star"] = a->kkt.y_star;
        d["mu"] = a->kkt.mu;
        d["objective"] = a->kkt.objective;
        d["feasibility"] = a->kkt.residuals.feasibility;
        d["stationarity"] = a->kkt.residuals.stationarity;
        return d;
      })
      .def("__repr__", [](const catalog::Instance& i) {
        std::ostringstream os;
        os << "<Instance " << i.spec.name << " (" << kind_of(i) << ", seed " << i.spec.seed << ")>";
        return os.str();
      });

  m.def("example1", &catalog::example1_bilinear, py::arg("seed") = 1,
        "10x10 bilinear game on boxes, B ~ U[0,5], z0 = 10 * ones.");
  m.def("example2", &catalog::example2_allocation, py::arg("seed") = 1,
        "20-agent ring allocation with logistic costs.");
  m.def("quadratic_saddle", &catalog::quadratic_saddle);
  m.def("scalar_bilinear", &catalog::scalar_bilinear);
  m.def("consensus_quadratics", &catalog::consensus_quadratics);
  m.def("allocation_quadratics", &catalog::allocation_quadratics);
  m.def(
      "build",
      [](const std::optional<std::string>& preset, const std::optional<std::string>& config,
         std::optional<std::uint64_t> seed) {
        return catalog::build(resolve(preset, config, seed, {}, {}, {}, {}).instance);
      },
      py::arg("preset") = py::none(), py::arg("config") = py::none(), py::arg("seed") = py::none(),
      "Instance of a preset name or of YAML config text.");

  m.def("list_presets", [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& p : harness::list_presets()) out.emplace_back(p.name, p.description);
    return out;
  });
  m.def("preset_yaml", [](const std::string& name) { return harness::preset_yaml(name); });

  m.def(
      "solve",
      [](std::optional<std::string> preset, std::optional<std::string> config, std::optional<std::uint64_t> seed,
         std::optional<double> alpha, std::optional<long> iters, std::optional<std::string> out,
         std::optional<std::vector<std::string>> methods) {
        const auto cfg = resolve(preset, config, seed, alpha, iters, out, methods);
        harness::SolveResult r;
        {
          py::gil_scoped_release release;
          r = harness::cmd_solve(cfg);
        }
        py::list runs;
        for (const auto& s : r.runs) {
          py::dict d;
          d["method"] = to_string(s.method);
          d["alpha"] = s.alpha;
          d["iterations"] = s.iterations;
          d["grad_calls"] = s.grad_calls;
          d["converged"] = s.converged;
          d["diverged"] = s.diverged;
          d["final_residual"] = s.final_residual;
          d["final_gap"] = s.final_gap;
          d["csv"] = s.csv_file;
          runs.append(d);
        }
        py::dict d;
        d["exit_code"] = r.exit_code;
        d["runs"] = runs;
        d["notes"] = r.notes;
        d["out"] = cfg.out_dir;
        return d;
      },
      py::arg("preset") = py::none(), py::arg("config") = py::none(), py::arg("seed") = py::none(),
      py::arg("alpha") = py::none(), py::arg("iters") = py::none(), py::arg("out") = py::none(),
      py::arg("methods") = py::none(), "Same as `saddlenet solve`; writes CSVs and summary.yaml to `out`.");

  m.def(
      "verify",
      [](std::optional<std::string> preset, std::optional<std::string> config, std::optional<std::uint64_t> seed,
         std::optional<std::string> out) {
        const auto cfg = resolve(preset, config, seed, {}, {}, out, {});
        harness::VerifyReport rep;
        {
          py::gil_scoped_release release;
          rep = harness::cmd_verify(cfg);
        }
        py::list checks;
        for (const auto& c : rep.checks) {
          py::dict d;
          d["name"] = c.name;
          d["passed"] = c.passed;
          d["margin"] = c.margin;
          d["detail"] = c.detail;
          checks.append(d);
        }
        py::dict d;
        d["passed"] = rep.passed();
        d["checks"] = checks;
        return d;
      },
      py::arg("preset") = py::none(), py::arg("config") = py::none(), py::arg("seed") = py::none(),
      py::arg("out") = py::none());
}
