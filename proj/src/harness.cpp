#include "saddlenet/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "saddlenet/oracle.hpp"
#include "saddlenet/rng.hpp"
#include "saddlenet/trace_io.hpp"

namespace saddlenet::harness {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr double kCertSlack = 1e-10;
constexpr int kStopCheckEvery = 10;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int calls_per_iter(Method m) { return m == Method::EG ? 2 : 1; }

double kappa_of(const catalog::Instance& inst) {
  if (const auto* s = std::get_if<catalog::SaddleInstance>(&inst.body)) return s->problem.kappa();
  if (const auto* c = std::get_if<catalog::ConsensusInstance>(&inst.body)) return c->problem.kappa_c;
  return std::get<catalog::AllocationInstance>(inst.body).problem.kappa_s;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

std::vector<Vector> split_blocks(const Vector& v, int n, int m) {
  std::vector<Vector> out;
  for (int i = 0; i < n; ++i) out.emplace_back(v.segment(static_cast<Eigen::Index>(i) * m, m));
  return out;
}

void tally(RateReport& r, double gap, double bound, long k) {
  const double margin = bound - gap;
  ++r.checked;
  r.worst_margin = std::min(r.worst_margin, margin);
  if (margin < -kCertSlack && r.passed) {
    r.passed = false;
    r.first_violation = static_cast<int>(k);
  }
}

// Shared loop of the distributed runs; Net supplies the problem-specific parts.
template <class Net>
NetworkRunResult run_network(const Net& net, const NetworkRunOptions& o) {
  const auto t0 = Clock::now();
  NetworkRunResult res;
  res.method = o.method;
  res.alpha = o.alpha;
  require(o.method != Method::GDA, "distributed runs support OGDA and EG only");
  require(o.record_every >= 1, "record_every must be >= 1");

  auto state = net.initial();
  const Vector w0 = state.stacked();
  const Vector& w_star = net.reference();
  const double f_star = objective(net.stacked(), w_star);
  const double r0 = (w0 - w_star).squaredNorm();
  Vector sum = Vector::Zero(w0.size());
  const IterateZ star = IterateZ::split(net.stacked(), w_star);
  res.rate.worst_margin = std::numeric_limits<double>::infinity();
  res.gap_rate.worst_margin = std::numeric_limits<double>::infinity();

  long last_written = -1;
  auto record = [&](long k) {
    if (o.csv) net.write_rows(*o.csv, state);
    last_written = k;
  };
  if (o.csv) net.write_header(*o.csv);
  record(0);

  long k = 0;
  while (k < o.max_iters) {
    state = net.step(state, o.alpha);
    ++k;
    if (o.check_rate) {
      sum += o.method == Method::EG ? state.stacked_half() : state.stacked();
      const Vector ergodic = sum / static_cast<double>(k);
      const double gap = std::abs(objective(net.stacked(), ergodic) - f_star);
      const double bound = r0 / (2.0 * o.alpha * static_cast<double>(k));
      const IterateZ avg = IterateZ::split(net.stacked(), ergodic);
      const double sgap = net.stacked().value(avg.x, star.y) - net.stacked().value(star.x, avg.y);
      tally(res.rate, gap, bound, k);
      tally(res.gap_rate, sgap, bound, k);
    }
    if (k % o.record_every == 0) record(k);
    if (o.stop_tol > 0.0 && k % kStopCheckEvery == 0) {
      if (vi_residual(net.stacked(), state.stacked()) <= o.stop_tol) {
        res.converged = true;
        break;
      }
    }
  }
  if (last_written != k) record(k);

  res.iterations = k;
  res.grad_calls = state.grad_calls;
  res.final_stacked = state.stacked();
  res.vi_residual = vi_residual(net.stacked(), res.final_stacked);
  if (o.stop_tol > 0.0 && res.vi_residual <= o.stop_tol) res.converged = true;
  net.finish(state, res);
  if (res.rate.checked == 0) res.rate.worst_margin = 0.0;
  if (res.gap_rate.checked == 0) res.gap_rate.worst_margin = 0.0;
  res.wall_seconds = seconds_since(t0);
  return res;
}

struct ConsensusNet {
  const catalog::ConsensusInstance& inst;
  Method method;
  SaddleProblem problem = consensus_saddle_problem(inst.problem);

  const SaddleProblem& stacked() const { return problem; }
  const Vector& reference() const { return inst.saddle; }
  ConsensusState initial() const { return make_consensus_state(inst.problem, inst.x0); }
  ConsensusState step(const ConsensusState& s, double alpha) const {
    return method == Method::EG ? step_consensus_eg(inst.problem, s, alpha) : step_consensus_ogda(inst.problem, s, alpha);
  }
  void write_header(std::ostream& out) const { write_consensus_header(out, inst.problem.m); }
  void write_rows(std::ostream& out, const ConsensusState& s) const { write_consensus_rows(out, inst.problem, s); }
  void finish(const ConsensusState& s, NetworkRunResult& res) const {
    const Vector x = s.stacked_x();
    double err = 0.0;
    for (const auto& a : s.agents) err = std::max(err, (a.x - inst.s_star).cwiseAbs().maxCoeff());
    res.primal_error = err;
    res.constraint_residual = consensus_residual(inst.problem, x);
    res.objective = objective_sum(inst.problem, x);
  }
};

struct AllocationNet {
  const catalog::AllocationInstance& inst;
  Method method;
  SaddleProblem problem = allocation_saddle_problem(inst.problem);

  const SaddleProblem& stacked() const { return problem; }
  const Vector& reference() const { return inst.saddle; }
  AllocationState initial() const { return make_allocation_state(inst.problem); }
  AllocationState step(const AllocationState& s, double alpha) const {
    return method == Method::EG ? step_allocation_eg(inst.problem, s, alpha)
                                : step_allocation_ogda(inst.problem, s, alpha);
  }
  void write_header(std::ostream& out) const { write_allocation_header(out, inst.problem); }
  void write_rows(std::ostream& out, const AllocationState& s) const { write_allocation_rows(out, inst.problem, s); }
  void finish(const AllocationState& s, NetworkRunResult& res) const {
    const Vector y = s.stacked_y();
    res.primal_error = (y - inst.kkt.y_star).cwiseAbs().maxCoeff();
    res.constraint_residual = feasibility_gap(inst.problem, y);
    res.objective = objective_sum(inst.problem, y);
    res.dual_spread = dual_spread(inst.problem, s.stacked_lambda());
  }
};

// One configured method on one instance; CSV text goes to `csv`.
RunSummary run_method(const ExperimentConfig& cfg, const catalog::Instance& inst, Method method, std::ostream& csv) {
  RunSummary sum;
  sum.method = method;
  sum.alpha = step_for(cfg, inst, method);
  sum.csv_file = lower(to_string(method)) + ".csv";
  const long iters = iterations_for(cfg, method);
  const auto t0 = Clock::now();
  try {
    if (const auto* s = std::get_if<catalog::SaddleInstance>(&inst.body)) {
      SolverConfig sc;
      sc.method = method;
      sc.step_size = sum.alpha;
      sc.max_iters = static_cast<int>(iters);
      sc.stop_tol = cfg.stop_tol;
      sc.record_every = cfg.record_every;
      sc.allow_unsafe_step = true;  // already validated by step_for
      write_trace_header(csv);
      TraceRecord last;
      const RunTrace t = run(s->problem, sc, s->z0, s->reference, [&](const TraceRecord& r) {
        write_trace_row(csv, r);
        last = r;
      });
      sum.iterations = t.iterations;
      sum.grad_calls = t.grad_calls;
      sum.converged = t.converged;
      sum.final_residual = t.final_residual;
      if (s->reference) sum.final_gap = std::abs(last.f_value - s->reference->f);
      if (last.dist_to_ref) sum.primal_error = *last.dist_to_ref;
    } else {
      NetworkRunOptions o;
      o.method = method;
      o.alpha = sum.alpha;
      o.max_iters = iters;
      o.stop_tol = cfg.stop_tol;
      o.record_every = cfg.record_every;
      o.csv = &csv;
      const NetworkRunResult r = inst.is_consensus() ? run_consensus(std::get<catalog::ConsensusInstance>(inst.body), o)
                                                     : run_allocation(std::get<catalog::AllocationInstance>(inst.body), o);
      sum.iterations = r.iterations;
      sum.grad_calls = r.grad_calls;
      sum.converged = r.converged;
      sum.final_residual = r.vi_residual;
      sum.final_gap = r.constraint_residual;
      sum.primal_error = r.primal_error;
      if (inst.is_allocation()) sum.dual_spread = r.dual_spread;
    }
  } catch (const DivergenceError& e) {
    sum.diverged = true;
    sum.message = e.what();
  }
  sum.wall_seconds = seconds_since(t0);
  return sum;
}

// Pre-use gate: the problem must look monotone, respect its declared kappa,
// and have consistent gradients.
void precheck(const catalog::Instance& inst) {
  const SaddleProblem p = inst.is_saddle()      ? std::get<catalog::SaddleInstance>(inst.body).problem
                          : inst.is_consensus() ? consensus_saddle_problem(std::get<catalog::ConsensusInstance>(inst.body).problem)
                                                : allocation_saddle_problem(std::get<catalog::AllocationInstance>(inst.body).problem);
  const auto mono = check_monotone(p, 200, 0x9e3779b9);
  if (!mono.passed) {
    throw InvariantError("precheck monotone failed: min inner product " + format_real(mono.min_inner));
  }
  estimate_kappa(p, 200, 0x51ed270b);
  const double g = gradient_error(p, 20, 0x2545f491);
  if (g > 1e-5) throw InvariantError("precheck gradient_fd failed: relative error " + format_real(g));
}

void emit_vector(YAML::Emitter& y, const Vector& v) {
  y << YAML::Flow << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < v.size(); ++i) y << v[i];
  y << YAML::EndSeq;
}

void emit_reals(YAML::Emitter& y, const std::vector<double>& v) {
  y << YAML::Flow << YAML::BeginSeq;
  for (double d : v) y << d;
  y << YAML::EndSeq;
}

}  // namespace

long iterations_for(const ExperimentConfig& config, Method method) {
  if (config.compare) return config.grad_budget / calls_per_iter(method);
  return config.iters;
}

double step_for(const ExperimentConfig& config, const catalog::Instance& instance, Method method) {
  const double kappa = kappa_of(instance);
  double requested = config.alpha;
  if (requested == 0.0) {
    if (const auto* s = std::get_if<catalog::SaddleInstance>(&instance.body)) requested = s->alpha;
  }
  SolverConfig sc;
  sc.method = method;
  sc.step_size = requested;
  sc.allow_unsafe_step = config.allow_unsafe_step;
  return resolve_step_size(sc, kappa);
}

NetworkRunResult run_consensus(const catalog::ConsensusInstance& instance, const NetworkRunOptions& options) {
  return run_network(ConsensusNet{instance, options.method}, options);
}

NetworkRunResult run_allocation(const catalog::AllocationInstance& instance, const NetworkRunOptions& options) {
  return run_network(AllocationNet{instance, options.method}, options);
}

SolveResult cmd_solve(const ExperimentConfig& config) {
  if (config.methods.empty()) throw ValidationError("no methods configured");
  const catalog::Instance inst = catalog::build(config.instance);
  for (Method m : config.methods) {
    if (!inst.is_saddle() && m == Method::GDA) throw ValidationError("GDA is not defined for distributed instances");
    step_for(config, inst, m);  // reject invalid steps before any work
  }
  precheck(inst);

  const fs::path dir(config.out_dir);
  fs::create_directories(dir);

  SolveResult result;
  result.notes = inst.notes;
  std::vector<std::string> csvs(config.methods.size());
  result.runs.resize(config.methods.size());
  auto job = [&](std::size_t i) {
    std::ostringstream csv;
    result.runs[i] = run_method(config, inst, config.methods[i], csv);
    csvs[i] = csv.str();
  };
  if (config.jobs > 1) {
    std::vector<std::future<void>> pending;
    std::size_t next = 0;
    while (next < config.methods.size() || !pending.empty()) {
      while (next < config.methods.size() && pending.size() < static_cast<std::size_t>(config.jobs)) {
        pending.push_back(std::async(std::launch::async, job, next++));
      }
      pending.front().get();
      pending.erase(pending.begin());
    }
  } else {
    for (std::size_t i = 0; i < config.methods.size(); ++i) job(i);
  }

  for (std::size_t i = 0; i < csvs.size(); ++i) write_file(dir / result.runs[i].csv_file, csvs[i]);
  for (const auto& r : result.runs) {
    if (r.diverged) result.exit_code = kExitDivergence;
  }
  write_file(dir / "summary.yaml", summary_yaml(config, inst, result));
  write_file(dir / "reference.yaml", reference_yaml(inst));
  return result;
}

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

namespace {

class Checks {
 public:
  explicit Checks(VerifyReport& r) : report_(r) {}

  // Records `value <= limit`.
  void at_most(std::string name, double value, double limit, std::string detail = {}) {
    const bool ok = std::isfinite(value) && value <= limit;
    report_.checks.push_back({std::move(name), ok, limit - value, std::move(detail)});
  }
  void flag(std::string name, bool ok, double margin, std::string detail = {}) {
    report_.checks.push_back({std::move(name), ok, margin, std::move(detail)});
  }
  // Runs `body`; a thrown library error becomes a failed check.
  template <class F>
  void guarded(const std::string& name, F&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      report_.checks.push_back({name, false, -std::numeric_limits<double>::infinity(), e.what()});
    }
  }

 private:
  VerifyReport& report_;
};

void operator_suite(Checks& c, const SaddleProblem& p, const VerifyOptions& v, std::uint64_t seed) {
  c.guarded("monotone", [&] {
    const auto r = check_monotone(p, v.samples, seed ^ 0x1);
    c.flag("monotone", r.passed, r.min_inner + 1e-10,
           "min (F(z1)-F(z2))^T(z1-z2) over " + std::to_string(r.samples) + " pairs = " + format_real(r.min_inner));
  });
  c.guarded("lipschitz", [&] {
    const auto r = sample_lipschitz(p, v.samples, seed ^ 0x2);
    c.flag("lipschitz", r.passed, r.declared * (1.0 + 1e-8) - r.max_ratio,
           "max ratio " + format_real(r.max_ratio) + " vs declared kappa " + format_real(r.declared));
  });
  c.guarded("convex_concave", [&] {
    const auto r = check_convex_concave(p, v.samples, seed ^ 0x3);
    c.flag("convex_concave", r.passed, -r.worst_violation, "worst midpoint violation " + format_real(r.worst_violation));
  });
  c.guarded("gradient_fd", [&] {
    c.at_most("gradient_fd", gradient_error(p, v.fd_points, seed ^ 0x4), 1e-5, "max relative error vs central differences");
  });
}

// Rate / Delta_k / EG certificates and fixed point on a centralized problem.
void solver_suite(Checks& c, const SaddleProblem& p, const Vector& z0, const Reference& ref, Method m, double alpha,
                  const VerifyOptions& v) {
  const std::string tag = "/" + to_string(m);
  SolverConfig sc;
  sc.method = m;
  sc.step_size = alpha;
  sc.max_iters = v.certificate_iters;
  sc.stop_tol = 0.0;
  sc.allow_unsafe_step = true;
  c.guarded("certificates" + tag, [&] {
    const RunTrace t = run(p, sc, z0, ref);
    const ConvexSet lambda = p.feasible_set();
    // z_0 may start outside the set, so record 0 is skipped.
    double worst = 0.0;
    for (std::size_t i = 1; i < t.records.size(); ++i) {
      const auto& r = t.records[i];
      worst = std::max(worst, (r.z - lambda.project(r.z)).norm());
      if (r.z_half) worst = std::max(worst, (*r.z_half - lambda.project(*r.z_half)).norm());
    }
    c.at_most("feasibility" + tag, worst, 1e-12, "max distance of recorded iterates to the feasible set");
    if (m != Method::GDA) {
      const RateReport rr = check_ergodic_rate(t);
      c.flag("ergodic_rate" + tag, rr.passed, rr.worst_margin,
             "|f(ergodic_T) - f*| <= ||z0 - z*||^2/(2 alpha T) over " + std::to_string(rr.checked) + " T");
      const RateReport gr = check_saddle_gap(t);
      c.flag("saddle_gap" + tag, gr.passed, gr.worst_margin,
             "f(x_hat, y*) - f(x*, y_hat) <= ||z0 - z*||^2/(2 alpha T) over " + std::to_string(gr.checked) + " T");
    }
    if (m == Method::OGDA) {
      const DescentReport d = check_delta_descent(p, t, ref.z, alpha);
      c.flag("delta_descent" + tag, d.passed, d.worst_margin,
             "Delta_{k+1} <= Delta_k - eta ||z_{k+1}-z_k||^2 over " + std::to_string(d.steps_checked) + " steps");
    }
    if (m == Method::EG) {
      const DescentReport d = eg_contraction_check(t, ref.z, alpha, p.kappa());
      c.flag("eg_contraction" + tag, d.passed, d.worst_margin,
             "||z_{k+1}-z*||^2 <= ||z_k-z*||^2 - 2 alpha rho ||z_{k+1}-z_{k+1/2}||^2 over " +
                 std::to_string(d.steps_checked) + " steps");
    }
  });
  c.guarded("fixed_point" + tag, [&] {
    SaddleSolver s(p, m, alpha, ref.z);
    double drift = 0.0;
    for (int k = 0; k < v.fixed_point_steps; ++k) {
      s.advance();
      drift = std::max(drift, (s.z() - ref.z).cwiseAbs().maxCoeff());
    }
    c.at_most("fixed_point" + tag, drift, 1e-12,
              std::to_string(v.fixed_point_steps) + " steps from the certified saddle point");
  });
  c.guarded("grad_calls" + tag, [&] {
    SaddleSolver s(p, m, alpha, z0);
    const int steps = 10;
    for (int k = 0; k < steps; ++k) s.advance();
    const long expected = static_cast<long>(steps) * calls_per_iter(m);
    c.flag("grad_calls" + tag, s.grad_calls() == expected, static_cast<double>(expected - s.grad_calls()),
           std::to_string(s.grad_calls()) + " operator evaluations in " + std::to_string(steps) + " iterations");
  });
}

template <class Net, class State>
void network_suite(Checks& c, const Net& net, const std::function<State(const Vector&)>& from_stacked, Method m,
                   double alpha, const VerifyOptions& v) {
  const std::string tag = "/" + to_string(m);
  c.guarded("equivalence" + tag, [&] {
    State s = net.initial();
    SaddleSolver stacked(net.stacked(), m, alpha, s.stacked());
    double dev = 0.0;
    for (int k = 0; k < v.equivalence_iters; ++k) {
      s = net.step(s, alpha);
      stacked.advance();
      dev = std::max(dev, (s.stacked() - stacked.z()).cwiseAbs().maxCoeff());
      if (m == Method::EG) dev = std::max(dev, (s.stacked_half() - *stacked.z_half()).cwiseAbs().maxCoeff());
    }
    c.at_most("equivalence" + tag, dev, 1e-12,
              "max |distributed - stacked| over " + std::to_string(v.equivalence_iters) + " iterations");
  });
  c.guarded("network_rate" + tag, [&] {
    NetworkRunOptions o;
    o.method = m;
    o.alpha = alpha;
    o.max_iters = v.certificate_iters;
    o.stop_tol = 0.0;
    o.check_rate = true;
    const NetworkRunResult r = run_network(net, o);
    c.flag("network_rate" + tag, r.rate.passed, r.rate.worst_margin,
           "distributed ergodic certificate over " + std::to_string(r.rate.checked) + " T");
    c.flag("network_saddle_gap" + tag, r.gap_rate.passed, r.gap_rate.worst_margin,
           "distributed saddle-gap certificate over " + std::to_string(r.gap_rate.checked) + " T");
    c.flag("network_grad_calls" + tag, r.grad_calls == r.iterations * calls_per_iter(m),
           static_cast<double>(r.iterations * calls_per_iter(m) - r.grad_calls),
           std::to_string(r.grad_calls) + " gradient calls per agent in " + std::to_string(r.iterations) + " iterations");
  });
  c.guarded("network_fixed_point" + tag, [&] {
    State s = from_stacked(net.reference());
    double drift = 0.0;
    for (int k = 0; k < v.fixed_point_steps; ++k) {
      s = net.step(s, alpha);
      drift = std::max(drift, (s.stacked() - net.reference()).cwiseAbs().maxCoeff());
    }
    c.at_most("network_fixed_point" + tag, drift, 1e-12,
              std::to_string(v.fixed_point_steps) + " distributed steps from the certified saddle point");
  });
}

void determinism_check(Checks& c, const ExperimentConfig& cfg, const catalog::Instance& inst, Method m) {
  const std::string name = "determinism/" + to_string(m);
  c.guarded(name, [&] {
    ExperimentConfig short_cfg = cfg;
    short_cfg.compare = false;
    short_cfg.iters = std::min<long>(iterations_for(cfg, m), cfg.verify.certificate_iters);
    std::ostringstream a, b;
    run_method(short_cfg, inst, m, a);
    const catalog::Instance again = catalog::build(cfg.instance);
    run_method(short_cfg, again, m, b);
    c.flag(name, a.str() == b.str(), 0.0, "two runs from the same spec and seed, CSV compared byte for byte");
  });
}

}  // namespace

VerifyReport verify_instance(const catalog::Instance& inst, const ExperimentConfig& cfg) {
  VerifyReport report;
  report.instance = inst.spec.name;
  Checks c(report);
  const VerifyOptions& v = cfg.verify;
  const std::uint64_t seed = inst.spec.seed * 0x9e3779b97f4a7c15ULL + 17;

  if (const auto* s = std::get_if<catalog::SaddleInstance>(&inst.body)) {
    operator_suite(c, s->problem, v, seed);
    if (!s->reference) {
      c.flag("reference", false, -1.0, "no certified saddle point for this instance");
    } else {
      c.at_most("reference", vi_residual(s->problem, s->reference->z), 1e-8, "natural residual at z*");
      for (Method m : cfg.methods) solver_suite(c, s->problem, s->z0, *s->reference, m, step_for(cfg, inst, m), v);
    }
  } else if (const auto* ci = std::get_if<catalog::ConsensusInstance>(&inst.body)) {
    const auto& prob = ci->problem;
    const SaddleProblem stacked = consensus_saddle_problem(prob);
    operator_suite(c, stacked, v, seed);
    c.guarded("agent_gradient_fd", [&] {
      double worst = 0.0;
      Rng rng(seed ^ 0x5);
      for (const auto& a : prob.agents) {
        std::vector<Vector> pts;
        for (int k = 0; k < v.fd_points; ++k) pts.push_back(a.set.sample(rng));
        worst = std::max(worst, oracle::finite_diff_check(a.objective, a.gradient, pts, 1e-5).max_rel_error);
      }
      c.at_most("agent_gradient_fd", worst, 1e-5, "per-agent objective vs central differences");
    });
    c.guarded("operator_cross_check", [&] {
      Rng rng(seed ^ 0x6);
      const ConvexSet lambda = stacked.feasible_set();
      double worst = 0.0;
      for (int k = 0; k < 100; ++k) {
        const Vector w = lambda.sample(rng);
        const Vector a = operator_phi(prob, w.head(prob.stacked_dim()), w.tail(prob.stacked_dim()));
        const Vector b = operator_F(stacked, w);
        worst = std::max(worst, (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff()));
      }
      c.at_most("operator_cross_check", worst, 1e-12, "neighbor-sum Phi vs assembled operator, 100 points");
    });
    c.at_most("reference", vi_residual(stacked, ci->saddle), 1e-8, "natural residual at (x*, v*)");
    ConsensusNet net{*ci, Method::OGDA};
    const int n = prob.size(), m = prob.m;
    const std::function<ConsensusState(const Vector&)> from = [&](const Vector& w) {
      return make_consensus_state(prob, split_blocks(w.head(prob.stacked_dim()), n, m),
                                  split_blocks(w.tail(prob.stacked_dim()), n, m));
    };
    const Vector w0 = make_consensus_state(prob, ci->x0).stacked();
    const Reference ref = make_reference(stacked, ci->saddle);
    for (Method meth : cfg.methods) {
      const double alpha = step_for(cfg, inst, meth);
      net.method = meth;
      network_suite<ConsensusNet, ConsensusState>(c, net, from, meth, alpha, v);
      solver_suite(c, stacked, w0, ref, meth, alpha, v);
    }
  } else {
    const auto& ai = std::get<catalog::AllocationInstance>(inst.body);
    const auto& prob = ai.problem;
    const SaddleProblem stacked = allocation_saddle_problem(prob);
    operator_suite(c, stacked, v, seed);
    c.guarded("agent_gradient_fd", [&] {
      double worst = 0.0;
      Rng rng(seed ^ 0x5);
      for (const auto& a : prob.agents) {
        std::vector<Vector> pts;
        for (int k = 0; k < v.fd_points; ++k) pts.push_back(a.set.sample(rng));
        worst = std::max(worst, oracle::finite_diff_check(a.objective, a.gradient, pts, 1e-5).max_rel_error);
      }
      c.at_most("agent_gradient_fd", worst, 1e-5, "per-agent objective vs central differences");
    });
    c.guarded("operator_cross_check", [&] {
      Rng rng(seed ^ 0x6);
      const ConvexSet lambda = stacked.feasible_set();
      const Eigen::Index q = prob.q_total, nm = prob.dual_dim();
      double worst = 0.0;
      for (int k = 0; k < 100; ++k) {
        const Vector w = lambda.sample(rng);
        const Vector a = operator_psi(prob, w.head(q), w.segment(q, nm), w.tail(nm));
        const Vector b = operator_F(stacked, w);
        worst = std::max(worst, (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff()));
      }
      c.at_most("operator_cross_check", worst, 1e-12, "neighbor-sum Psi vs assembled operator, 100 points");
    });
    c.at_most("kkt_feasibility", ai.kkt.residuals.feasibility, 1e-8, "||sum W_i y_i* - d_i||");
    c.at_most("kkt_stationarity", ai.kkt.residuals.stationarity, 1e-8, "grid-refined local optimality of y_i*");
    c.at_most("reference", vi_residual(stacked, ai.saddle), 1e-8, "natural residual at (y*, a*, lambda*)");
    AllocationNet net{ai, Method::OGDA};
    const std::function<AllocationState(const Vector&)> from = [&](const Vector& w) {
      return allocation_state_from_stacked(prob, w);
    };
    const Vector w0 = make_allocation_state(prob).stacked();
    const Reference ref = make_reference(stacked, ai.saddle);
    for (Method meth : cfg.methods) {
      const double alpha = step_for(cfg, inst, meth);
      net.method = meth;
      network_suite<AllocationNet, AllocationState>(c, net, from, meth, alpha, v);
      solver_suite(c, stacked, w0, ref, meth, alpha, v);
    }
  }
  for (Method m : cfg.methods) determinism_check(c, cfg, inst, m);
  return report;
}

VerifyReport cmd_verify(const ExperimentConfig& config) {
  if (config.methods.empty()) throw ValidationError("no methods configured");
  const catalog::Instance inst = catalog::build(config.instance);
  for (Method m : config.methods) step_for(config, inst, m);
  VerifyReport report = verify_instance(inst, config);
  fs::create_directories(config.out_dir);
  write_file(fs::path(config.out_dir) / "verify.yaml", report_yaml(report));
  return report;
}

std::string report_yaml(const VerifyReport& report) {
  YAML::Emitter y;
  y.SetDoublePrecision(17);
  y << YAML::BeginMap;
  y << YAML::Key << "instance" << YAML::Value << report.instance;
  y << YAML::Key << "passed" << YAML::Value << report.passed();
  y << YAML::Key << "checks" << YAML::Value << YAML::BeginSeq;
  for (const auto& c : report.checks) {
    y << YAML::BeginMap;
    y << YAML::Key << "name" << YAML::Value << c.name;
    y << YAML::Key << "passed" << YAML::Value << c.passed;
    y << YAML::Key << "margin" << YAML::Value << c.margin;
    y << YAML::Key << "detail" << YAML::Value << c.detail;
    y << YAML::EndMap;
  }
  y << YAML::EndSeq << YAML::EndMap;
  return std::string(y.c_str()) + "\n";
}

std::string summary_yaml(const ExperimentConfig& config, const catalog::Instance& inst, const SolveResult& result) {
  YAML::Emitter y;
  y.SetDoublePrecision(17);
  y << YAML::BeginMap;
  y << YAML::Key << "instance" << YAML::Value << YAML::BeginMap;
  y << YAML::Key << "name" << YAML::Value << inst.spec.name;
  y << YAML::Key << "family" << YAML::Value << catalog::to_string(inst.spec.family());
  y << YAML::Key << "seed" << YAML::Value << inst.spec.seed;
  y << YAML::Key << "rng" << YAML::Value << Rng::kAlgorithm;
  y << YAML::Key << "parameters" << YAML::Value << YAML::BeginMap;
  for (const auto& [k, v] : inst.parameters) {
    y << YAML::Key << k << YAML::Value;
    emit_reals(y, v);
  }
  y << YAML::EndMap << YAML::EndMap;
  if (!result.notes.empty()) {
    y << YAML::Key << "notes" << YAML::Value << YAML::BeginSeq;
    for (const auto& n : result.notes) y << n;
    y << YAML::EndSeq;
  }
  y << YAML::Key << "compare" << YAML::Value << config.compare;
  y << YAML::Key << "runs" << YAML::Value << YAML::BeginSeq;
  for (const auto& r : result.runs) {
    y << YAML::BeginMap;
    y << YAML::Key << "method" << YAML::Value << to_string(r.method);
    y << YAML::Key << "alpha" << YAML::Value << r.alpha;
    y << YAML::Key << "iterations" << YAML::Value << r.iterations;
    y << YAML::Key << "grad_calls" << YAML::Value << r.grad_calls;
    y << YAML::Key << "converged" << YAML::Value << r.converged;
    y << YAML::Key << "diverged" << YAML::Value << r.diverged;
    y << YAML::Key << "final_vi_residual" << YAML::Value << r.final_residual;
    if (r.final_gap) {
      y << YAML::Key << (inst.is_saddle() ? "final_objective_error" : inst.is_consensus() ? "consensus_residual"
                                                                                          : "feasibility_gap")
        << YAML::Value << *r.final_gap;
    }
    if (r.primal_error) y << YAML::Key << "primal_error" << YAML::Value << *r.primal_error;
    if (r.dual_spread) y << YAML::Key << "dual_spread" << YAML::Value << *r.dual_spread;
    y << YAML::Key << "wall_seconds" << YAML::Value << r.wall_seconds;
    y << YAML::Key << "csv" << YAML::Value << r.csv_file;
    if (!r.message.empty()) y << YAML::Key << "message" << YAML::Value << r.message;
    y << YAML::EndMap;
  }
  y << YAML::EndSeq << YAML::EndMap;
  return std::string(y.c_str()) + "\n";
}

std::string reference_yaml(const catalog::Instance& inst) {
  YAML::Emitter y;
  y.SetDoublePrecision(17);
  y << YAML::BeginMap;
  y << YAML::Key << "instance" << YAML::Value << inst.spec.name;
  if (const auto* s = std::get_if<catalog::SaddleInstance>(&inst.body)) {
    if (s->reference) {
      y << YAML::Key << "z_star" << YAML::Value;
      emit_vector(y, s->reference->z);
      y << YAML::Key << "f_star" << YAML::Value << s->reference->f;
      y << YAML::Key << "vi_residual" << YAML::Value << vi_residual(s->problem, s->reference->z);
    }
  } else if (const auto* c = std::get_if<catalog::ConsensusInstance>(&inst.body)) {
    const Eigen::Index nm = c->problem.stacked_dim();
    y << YAML::Key << "s_star" << YAML::Value;
    emit_vector(y, c->s_star);
    y << YAML::Key << "x_star" << YAML::Value;
    emit_vector(y, c->saddle.head(nm));
    y << YAML::Key << "v_star" << YAML::Value;
    emit_vector(y, c->saddle.tail(nm));
    y << YAML::Key << "objective_star" << YAML::Value << objective_sum(c->problem, c->saddle.head(nm));
    y << YAML::Key << "vi_residual" << YAML::Value << vi_residual(consensus_saddle_problem(c->problem), c->saddle);
  } else {
    const auto& a = std::get<catalog::AllocationInstance>(inst.body);
    const Eigen::Index q = a.problem.q_total, nm = a.problem.dual_dim();
    y << YAML::Key << "y_star" << YAML::Value;
    emit_vector(y, a.kkt.y_star);
    y << YAML::Key << "mu" << YAML::Value;
    emit_vector(y, a.kkt.mu);
    y << YAML::Key << "a_star" << YAML::Value;
    emit_vector(y, a.saddle.segment(q, nm));
    y << YAML::Key << "lambda_star" << YAML::Value;
    emit_vector(y, a.saddle.tail(nm));
    y << YAML::Key << "objective_star" << YAML::Value << a.kkt.objective;
    y << YAML::Key << "feasibility_residual" << YAML::Value << a.kkt.residuals.feasibility;
    y << YAML::Key << "stationarity_residual" << YAML::Value << a.kkt.residuals.stationarity;
    y << YAML::Key << "bracket_widenings" << YAML::Value << a.kkt.widenings;
    y << YAML::Key << "d_redraws" << YAML::Value << a.redraws;
    y << YAML::Key << "vi_residual" << YAML::Value << vi_residual(allocation_saddle_problem(a.problem), a.saddle);
  }
  y << YAML::EndMap;
  return std::string(y.c_str()) + "\n";
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const DivergenceError*>(&e)) return kExitDivergence;
  if (dynamic_cast<const InvariantError*>(&e)) return kExitInvariant;
  return kExitValidation;
}

}  // namespace saddlenet::harness
