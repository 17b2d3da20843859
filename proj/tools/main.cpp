#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "saddlenet/harness.hpp"
#include "saddlenet/trace_io.hpp"

using namespace saddlenet;

namespace {

struct Overrides {
  std::string preset;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<long> iters;
  std::optional<std::string> out;
  std::vector<std::string> methods;
  std::optional<int> jobs;
};

void add_common(CLI::App* cmd, Overrides& o) {
  auto* p = cmd->add_option("--preset", o.preset, "shipped experiment (see list-presets)");
  auto* c = cmd->add_option("--config", o.config, "YAML experiment file");
  p->excludes(c);
  cmd->add_option("--seed", o.seed, "instance seed");
  cmd->add_option("--alpha", o.alpha, "step size (default: instance step or 0.9 of the bound)");
  cmd->add_option("--iters", o.iters, "iterations per method (turns comparison mode off)");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--method", o.methods, "GDA, OGDA or EG; repeat or comma-separate")->delimiter(',');
  cmd->add_option("--jobs", o.jobs, "methods run in parallel")->check(CLI::PositiveNumber);
}

harness::ExperimentConfig resolve(const Overrides& o) {
  if (o.preset.empty() && o.config.empty()) throw ValidationError("give --preset NAME or --config FILE");
  harness::ExperimentConfig cfg = o.config.empty() ? harness::preset(o.preset) : harness::load_config(o.config);
  if (o.seed) cfg.instance.seed = *o.seed;
  if (o.alpha) {
    if (!(*o.alpha > 0.0)) throw ValidationError("--alpha must be positive");
    cfg.alpha = *o.alpha;
    // An explicit step replaces the instance's recommended one.
    if (auto* b = std::get_if<catalog::BilinearBoxSpec>(&cfg.instance.params)) b->alpha = *o.alpha;
  }
  if (o.iters) {
    if (*o.iters < 0) throw ValidationError("--iters must be >= 0");
    cfg.iters = *o.iters;
    cfg.compare = false;
  }
  if (o.out) cfg.out_dir = *o.out;
  if (o.jobs) cfg.jobs = *o.jobs;
  if (!o.methods.empty()) {
    cfg.methods.clear();
    for (const auto& m : o.methods) {
      if (m.empty()) continue;
      cfg.methods.push_back(parse_method(m));
    }
    if (cfg.methods.empty()) throw ValidationError("--method list is empty");
  }
  return cfg;
}

int do_solve(const Overrides& o) {
  const auto cfg = resolve(o);
  const auto res = harness::cmd_solve(cfg);
  for (const auto& n : res.notes) std::cout << "note: " << n << "\n";
  for (const auto& r : res.runs) {
    std::cout << to_string(r.method) << ": alpha=" << format_real(r.alpha) << " iters=" << r.iterations
              << " grad_calls=" << r.grad_calls << " vi_residual=" << format_real(r.final_residual);
    if (r.final_gap) std::cout << " gap=" << format_real(*r.final_gap);
    std::cout << " wall=" << format_real(r.wall_seconds) << "s";
    if (r.diverged) std::cout << " DIVERGED (" << r.message << ")";
    std::cout << "\n";
  }
  std::cout << "wrote " << cfg.out_dir << "\n";
  return res.exit_code;
}

int do_verify(const Overrides& o) {
  const auto cfg = resolve(o);
  const auto rep = harness::cmd_verify(cfg);
  for (const auto& c : rep.checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << "  margin=" << format_real(c.margin);
    if (!c.detail.empty()) std::cout << "  " << c.detail;
    std::cout << "\n";
  }
  std::cout << (rep.passed() ? "all checks passed" : "verification FAILED") << "; report in " << cfg.out_dir
            << "/verify.yaml\n";
  return rep.passed() ? harness::kExitOk : harness::kExitInvariant;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projected primal-dual saddle-point solvers (GDA, OGDA, EG) and distributed simulations"};
  app.require_subcommand(1);
  Overrides solve_opts, verify_opts;
  auto* solve = app.add_subcommand("solve", "run the configured methods and write CSV traces and a summary");
  add_common(solve, solve_opts);
  auto* verify = app.add_subcommand("verify", "run the invariant suite and write a pass/fail report");
  add_common(verify, verify_opts);
  auto* list = app.add_subcommand("list-presets", "list shipped experiments");
  std::string show;
  list->add_option("--show", show, "print the YAML of one preset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return harness::kExitValidation;
  }

  try {
    if (*solve) return do_solve(solve_opts);
    if (*verify) return do_verify(verify_opts);
    if (!show.empty()) {
      std::cout << harness::preset_yaml(show);
      return 0;
    }
    for (const auto& p : harness::list_presets()) std::printf("%-12s %s\n", p.name.c_str(), p.description.c_str());
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return harness::exit_code_for(e);
  }
}
