// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run all nine
//   acceptance --only N   run criterion N (exit 1 when it fails)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "saddlenet/catalog.hpp"
#include "saddlenet/harness.hpp"
#include "saddlenet/trace_io.hpp"

using namespace saddlenet;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool passed = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) passed = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "NOT ") + what;
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

const catalog::SaddleInstance& saddle(const catalog::Instance& i) { return std::get<catalog::SaddleInstance>(i.body); }

RunTrace full_trace(const SaddleProblem& p, Method m, double alpha, const Vector& z0, const std::optional<Reference>& ref,
                    int iters) {
  SolverConfig cfg;
  cfg.method = m;
  cfg.step_size = alpha;
  cfg.max_iters = iters;
  cfg.stop_tol = 0.0;
  return run(p, cfg, z0, ref);
}

// Every shipped problem with a certified saddle point, in stacked form.
struct Certified {
  std::string name;
  SaddleProblem problem;
  Vector z0;
  Reference reference;
  std::function<double(Method)> alpha;
};

std::vector<Certified> certified_problems() {
  std::vector<Certified> out;
  for (const auto& info : harness::list_presets()) {
    if (info.name == "corrupted") continue;
    const auto cfg = harness::preset(info.name);
    const auto inst = std::make_shared<catalog::Instance>(catalog::build(cfg.instance));
    auto alpha = [cfg, inst](Method m) { return harness::step_for(cfg, *inst, m); };
    if (const auto* s = std::get_if<catalog::SaddleInstance>(&inst->body)) {
      if (s->reference) out.push_back({info.name, s->problem, s->z0, *s->reference, alpha});
    } else if (const auto* c = std::get_if<catalog::ConsensusInstance>(&inst->body)) {
      auto p = consensus_saddle_problem(c->problem);
      out.push_back({info.name, p, make_consensus_state(c->problem, c->x0).stacked(), make_reference(p, c->saddle), alpha});
    } else {
      const auto& a = std::get<catalog::AllocationInstance>(inst->body);
      auto p = allocation_saddle_problem(a.problem);
      out.push_back({info.name, p, make_allocation_state(a.problem).stacked(), make_reference(p, a.saddle), alpha});
    }
  }
  return out;
}

Outcome criterion1() {
  Outcome o;
  const auto inst = catalog::example1_bilinear(1);
  const auto& s = saddle(inst);
  o.require(s.alpha < 1.0 / (2.0 * s.problem.kappa()), "alpha " + num(s.alpha) + " < 1/(2 kappa)");
  const auto t0 = Clock::now();
  for (Method m : {Method::GDA, Method::OGDA, Method::EG}) {
    const auto t = full_trace(s.problem, m, s.alpha, s.z0, std::nullopt, 5000);
    const double last = std::abs(t.records.back().f_value);
    if (m == Method::GDA) {
      double low = INFINITY;
      for (const auto& r : t.records)
        if (r.iter > 2500) low = std::min(low, std::abs(r.f_value));
      o.require(low > 1e-3, "GDA min |f| over k in (2500, 5000] = " + num(low) + " > 1e-3");
    } else {
      o.require(last <= 1e-6, to_string(m) + " |f(z_5000)| = " + num(last) + " <= 1e-6");
    }
  }
  const double wall = seconds(t0);
  o.require(wall <= 5.0, "runtime " + num(wall) + " s <= 5 s");
  return o;
}

Outcome criterion2() {
  Outcome o;
  const auto ex1 = catalog::example1_bilinear(1);
  const auto quad = catalog::quadratic_saddle();
  for (const auto* inst : {&ex1, &quad}) {
    const auto& s = saddle(*inst);
    for (Method m : {Method::OGDA, Method::EG}) {
      const double alpha = s.alpha > 0 ? s.alpha : 0.9 * step_bound(m, s.problem.kappa());
      const auto t = full_trace(s.problem, m, alpha, s.z0, s.reference, 5000);
      const auto r = check_ergodic_rate(t, 1e-10);
      o.require(r.passed && r.checked == 5000, inst->spec.name + "/" + to_string(m) + " holds for T = 1..5000 (min margin " +
                                                   num(r.worst_margin) + ")");
    }
  }
  return o;
}

Outcome descent_criterion(Method method) {
  Outcome o;
  for (const auto& c : certified_problems()) {
    const double alpha = c.alpha(method);
    const auto t = full_trace(c.problem, method, alpha, c.z0, c.reference, 2000);
    const auto r = method == Method::OGDA ? check_delta_descent(c.problem, t, c.reference.z, alpha, 1e-10)
                                          : eg_contraction_check(t, c.reference.z, alpha, c.problem.kappa(), 1e-10);
    o.require(r.passed && r.steps_checked == 2000, c.name + " (min margin " + num(r.worst_margin) + ")");
  }
  return o;
}

Outcome criterion5() {
  Outcome o;
  const auto inst = catalog::consensus_quadratics();
  const auto& ci = std::get<catalog::ConsensusInstance>(inst.body);
  o.require(ci.problem.size() == 5 && ci.problem.graph.edges().size() == 5, "5-agent ring");
  const auto t0 = Clock::now();
  for (Method m : {Method::OGDA, Method::EG}) {
    harness::NetworkRunOptions opt;
    opt.method = m;
    opt.alpha = consensus_step_size(ci.problem, m, 0.0);
    opt.max_iters = 100000;
    opt.stop_tol = 0.0;  // run all 1e5 iterations so the ergodic bound is checked for every T
    opt.record_every = 100000;
    opt.check_rate = true;
    const auto r = harness::run_consensus(ci, opt);
    const std::string tag = to_string(m) + " ";
    o.require(r.primal_error <= 1e-4, tag + "max_i |x_i - 3| = " + num(r.primal_error));
    o.require(r.constraint_residual <= 1e-6, tag + "consensus residual " + num(r.constraint_residual));
    o.require(r.rate.passed && r.rate.checked == 100000,
              tag + "ergodic bound for T = 1..1e5 (min margin " + num(r.rate.worst_margin) + ")");
  }
  const double wall = seconds(t0);
  o.require(wall <= 5.0, "runtime " + num(wall) + " s <= 5 s");
  return o;
}

Outcome criterion6() {
  Outcome o;
  const auto inst = catalog::example2_allocation(1);
  const auto& ai = std::get<catalog::AllocationInstance>(inst.body);
  const auto t0 = Clock::now();
  for (Method m : {Method::OGDA, Method::EG}) {
    harness::NetworkRunOptions opt;
    opt.method = m;
    opt.alpha = allocation_step_size(ai.problem, m, 0.0);
    opt.max_iters = 1000000 / (m == Method::EG ? 2 : 1);
    opt.stop_tol = 1e-10;
    opt.record_every = 1000000;
    const auto r = harness::run_allocation(ai, opt);
    const std::string tag = to_string(m) + " ";
    const double obj_err = std::abs(r.objective - ai.kkt.objective);
    o.require(r.grad_calls <= 1000000, tag + num(static_cast<double>(r.grad_calls)) + " gradient calls");
    o.require(r.constraint_residual <= 1e-4, tag + "feasibility gap " + num(r.constraint_residual));
    o.require(obj_err <= 1e-4, tag + "|sum h - h*| = " + num(obj_err));
    o.require(r.dual_spread <= 1e-5, tag + "dual spread " + num(r.dual_spread));
  }
  const double wall = seconds(t0);
  o.require(wall <= 60.0, "runtime " + num(wall) + " s <= 60 s");
  return o;
}

template <class State, class Step>
double stacked_deviation(const SaddleProblem& stacked, State s, Method m, double alpha, Step step) {
  Vector z = s.stacked(), z_prev = z;
  double dev = 0.0;
  for (int k = 0; k < 1000; ++k) {
    s = step(s);
    Vector next = m == Method::EG ? step_eg(stacked, z, alpha).next : step_ogda(stacked, z, z_prev, alpha);
    z_prev = z;
    z = std::move(next);
    dev = std::max(dev, (s.stacked() - z).cwiseAbs().maxCoeff());
  }
  return dev;
}

Outcome criterion7() {
  Outcome o;
  for (const auto& info : harness::list_presets()) {
    const auto cfg = harness::preset(info.name);
    const auto inst = catalog::build(cfg.instance);
    for (Method m : {Method::OGDA, Method::EG}) {
      double dev = -1.0;
      if (const auto* c = std::get_if<catalog::ConsensusInstance>(&inst.body)) {
        const double alpha = consensus_step_size(c->problem, m, 0.0);
        dev = stacked_deviation(consensus_saddle_problem(c->problem), make_consensus_state(c->problem, c->x0), m, alpha,
                                [&](const ConsensusState& s) {
                                  return m == Method::EG ? step_consensus_eg(c->problem, s, alpha)
                                                         : step_consensus_ogda(c->problem, s, alpha);
                                });
      } else if (const auto* a = std::get_if<catalog::AllocationInstance>(&inst.body)) {
        const double alpha = allocation_step_size(a->problem, m, 0.0);
        dev = stacked_deviation(allocation_saddle_problem(a->problem), make_allocation_state(a->problem), m, alpha,
                                [&](const AllocationState& s) {
                                  return m == Method::EG ? step_allocation_eg(a->problem, s, alpha)
                                                         : step_allocation_ogda(a->problem, s, alpha);
                                });
      }
      if (dev >= 0.0) o.require(dev <= 1e-12, info.name + "/" + to_string(m) + " max deviation " + num(dev));
    }
  }
  return o;
}

Outcome criterion8() {
  Outcome o;
  for (const auto& info : harness::list_presets()) {
    const auto cfg = harness::preset(info.name);
    const auto inst = catalog::build(cfg.instance);
    std::vector<std::pair<std::function<double(const Vector&)>, std::function<Vector(const Vector&)>>> objectives;
    std::vector<ConvexSet> sets;
    SaddleProblem p;
    if (const auto* s = std::get_if<catalog::SaddleInstance>(&inst.body)) {
      p = s->problem;
    } else if (const auto* c = std::get_if<catalog::ConsensusInstance>(&inst.body)) {
      p = consensus_saddle_problem(c->problem);
      for (const auto& a : c->problem.agents) objectives.emplace_back(a.objective, a.gradient), sets.push_back(a.set);
    } else {
      const auto& a = std::get<catalog::AllocationInstance>(inst.body);
      p = allocation_saddle_problem(a.problem);
      for (const auto& ag : a.problem.agents) objectives.emplace_back(ag.objective, ag.gradient), sets.push_back(ag.set);
    }
    const auto mono = check_monotone(p, 1000, 11);
    const auto lip = sample_lipschitz(p, 1000, 12);
    double fd = gradient_error(p, 100, 13);
    Rng rng(14);
    for (std::size_t i = 0; i < objectives.size(); ++i) {
      std::vector<Vector> pts;
      for (int k = 0; k < 100; ++k) pts.push_back(sets[i].sample(rng));
      fd = std::max(fd, oracle::finite_diff_check(objectives[i].first, objectives[i].second, pts, 1e-5).max_rel_error);
    }
    const bool ok = mono.min_inner >= -1e-10 && lip.max_ratio <= lip.declared * (1 + 1e-8) && fd <= 1e-5;
    const std::string line = info.name + " (min inner " + num(mono.min_inner) + ", Lipschitz ratio " + num(lip.max_ratio) +
                             "/" + num(lip.declared) + ", fd error " + num(fd) + ")";
    if (info.name == "corrupted") {
      o.require(!ok, "negative control rejected: " + line);
    } else {
      o.require(ok, line);
    }
  }
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome criterion9() {
  Outcome o;
  double drift = 0.0;
  for (const auto& c : certified_problems()) {
    for (Method m : {Method::GDA, Method::OGDA, Method::EG}) {
      SaddleSolver s(c.problem, m, c.alpha(m == Method::GDA ? Method::OGDA : m), c.reference.z);
      for (int k = 0; k < 100; ++k) s.advance();
      drift = std::max(drift, (s.z() - c.reference.z).cwiseAbs().maxCoeff());
    }
  }
  // The per-agent rounds, started at the distributed saddle points.
  for (const auto& info : harness::list_presets()) {
    const auto inst = catalog::build(harness::preset(info.name).instance);
    for (Method m : {Method::OGDA, Method::EG}) {
      if (const auto* c = std::get_if<catalog::ConsensusInstance>(&inst.body)) {
        const int n = c->problem.size(), dm = c->problem.m;
        std::vector<Vector> x0, v0;
        for (int i = 0; i < n; ++i) {
          x0.push_back(c->saddle.segment(i * dm, dm));
          v0.push_back(c->saddle.segment((n + i) * dm, dm));
        }
        const double alpha = consensus_step_size(c->problem, m, 0.0);
        auto s = make_consensus_state(c->problem, x0, v0);
        for (int k = 0; k < 100; ++k)
          s = m == Method::EG ? step_consensus_eg(c->problem, s, alpha) : step_consensus_ogda(c->problem, s, alpha);
        drift = std::max(drift, (s.stacked() - c->saddle).cwiseAbs().maxCoeff());
      } else if (const auto* a = std::get_if<catalog::AllocationInstance>(&inst.body)) {
        const double alpha = allocation_step_size(a->problem, m, 0.0);
        auto s = allocation_state_from_stacked(a->problem, a->saddle);
        for (int k = 0; k < 100; ++k)
          s = m == Method::EG ? step_allocation_eg(a->problem, s, alpha) : step_allocation_ogda(a->problem, s, alpha);
        drift = std::max(drift, (s.stacked() - a->saddle).cwiseAbs().maxCoeff());
      }
    }
  }
  o.require(drift <= 1e-12, "100 steps from every certified saddle point move at most " + num(drift));

  const fs::path root = fs::temp_directory_path() / ("saddlenet_acceptance_" + std::to_string(::getpid()));
  int identical = 0, compared = 0;
  for (const auto& info : harness::list_presets()) {
    if (info.name == "corrupted") continue;
    auto cfg = harness::preset(info.name);
    for (const char* run : {"a", "b"}) {
      cfg.out_dir = (root / info.name / run).string();
      harness::cmd_solve(cfg);
    }
    for (const auto& e : fs::directory_iterator(root / info.name / "a")) {
      if (e.path().extension() != ".csv") continue;
      ++compared;
      const auto other = root / info.name / "b" / e.path().filename();
      if (slurp(e.path()) == slurp(other) && !slurp(other).empty()) ++identical;
    }
  }
  fs::remove_all(root);
  o.require(compared > 0 && identical == compared,
            std::to_string(identical) + "/" + std::to_string(compared) + " CSVs bitwise identical across two runs");
  return o;
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
      return 2;
    }
  }
  const std::vector<Criterion> all = {
      {1, "bilinear box experiment: OGDA/EG reach |f| <= 1e-6, GDA stays above 1e-3", criterion1},
      {2, "ergodic objective-gap certificate on the bilinear box and quadratic saddle", criterion2},
      {3, "OGDA Delta_k descent along every certified trace", [] { return descent_criterion(Method::OGDA); }},
      {4, "EG distance contraction along every certified trace", [] { return descent_criterion(Method::EG); }},
      {5, "distributed consensus on the 5-agent ring", criterion5},
      {6, "distributed allocation, 20-agent logistic instance", criterion6},
      {7, "per-agent vs stacked trajectories", criterion7},
      {8, "operator property suite", criterion8},
      {9, "fixed points and bitwise determinism", criterion9},
  };
  int failed = 0, ran = 0;
  for (const auto& c : all) {
    if (only != 0 && c.id != only) continue;
    ++ran;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.passed = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.passed) ++failed;
    std::printf("[%s] criterion %d: %s (%.2f s) -- %s\n", o.passed ? "PASS" : "FAIL", c.id, c.title, seconds(t0),
                o.detail.c_str());
    std::fflush(stdout);
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
