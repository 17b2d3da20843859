// Config parsing and the shipped presets.

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "saddlenet/harness.hpp"

namespace saddlenet::harness {

namespace {

using catalog::Range;

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
    const int line = at.Mark().line >= 0 ? at.Mark().line + 1 : 1;
    throw ValidationError(source_ + ":" + std::to_string(line) + ": " + msg);
  }

  void expect_map(const YAML::Node& n, const std::string& what) const {
    if (!n.IsMap()) fail(n, what + " must be a mapping");
  }

  void allow_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& what) const {
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in " + what);
    }
  }

  template <class T>
  T get(const YAML::Node& n, const std::string& key) const {
    if (!n.IsScalar()) fail(n, "'" + key + "' must be a scalar");
    try {
      return n.as<T>();
    } catch (const YAML::BadConversion&) {
      fail(n, "'" + key + "' has an invalid value '" + n.Scalar() + "'");
    }
  }

  template <class T>
  void opt(const YAML::Node& map, const std::string& key, T& out) const {
    if (const auto n = map[key]) out = get<T>(n, key);
  }

  void opt_positive(const YAML::Node& map, const std::string& key, int& out) const {
    if (const auto n = map[key]) {
      out = get<int>(n, key);
      if (out < 1) fail(n, "'" + key + "' must be >= 1");
    }
  }

  std::vector<double> reals(const YAML::Node& n, const std::string& key) const {
    if (!n.IsSequence()) fail(n, "'" + key + "' must be a list of numbers");
    std::vector<double> out;
    for (const auto& e : n) out.push_back(get<double>(e, key));
    return out;
  }

  void opt_reals(const YAML::Node& map, const std::string& key, std::vector<double>& out) const {
    if (const auto n = map[key]) out = reals(n, key);
  }

  Range range(const YAML::Node& n, const std::string& key) const {
    const auto v = reals(n, key);
    if (v.size() != 2) fail(n, "'" + key + "' must be [lo, hi]");
    if (!(v[0] <= v[1])) fail(n, "'" + key + "' has lo > hi");
    return {v[0], v[1]};
  }

  void opt_range(const YAML::Node& map, const std::string& key, Range& out) const {
    if (const auto n = map[key]) out = range(n, key);
  }

  catalog::GraphSpec graph(const YAML::Node& n) const {
    catalog::GraphSpec g;
    if (n.IsScalar()) {
      g.kind = get<std::string>(n, "graph");
    } else {
      expect_map(n, "graph");
      allow_keys(n, {"kind", "edge_prob", "seed", "edges"}, "graph");
      opt(n, "kind", g.kind);
      opt(n, "edge_prob", g.edge_prob);
      opt(n, "seed", g.seed);
      if (const auto e = n["edges"]) {
        if (!e.IsSequence()) fail(e, "'edges' must be a list of [u, v] pairs");
        for (const auto& pair : e) {
          if (!pair.IsSequence() || pair.size() != 2) fail(pair, "each edge must be [u, v]");
          g.edges.emplace_back(get<int>(pair[0], "edges"), get<int>(pair[1], "edges"));
        }
        if (!n["kind"]) g.kind = "edges";
      }
    }
    static const std::set<std::string> kinds = {"ring", "path", "complete", "random", "edges"};
    if (!kinds.count(g.kind)) fail(n, "unknown graph kind '" + g.kind + "'");
    return g;
  }

 private:
  std::string source_;
};

catalog::InstanceSpec parse_instance(const Reader& r, const YAML::Node& n, bool& networked) {
  r.expect_map(n, "instance");
  if (!n["family"]) r.fail(n, "instance needs a 'family'");
  const auto family = r.get<std::string>(n["family"], "family");
  catalog::InstanceSpec spec;
  spec.name = family;
  r.opt(n, "name", spec.name);
  r.opt(n, "seed", spec.seed);
  const std::set<std::string> common = {"family", "name", "seed"};
  auto keys = [&](std::set<std::string> extra) {
    extra.insert(common.begin(), common.end());
    return extra;
  };

  if (family == "bilinear_box") {
    r.allow_keys(n, keys({"dim_x", "dim_y", "entries", "x_box", "y_box", "z0_fill", "alpha"}), "bilinear_box instance");
    catalog::BilinearBoxSpec s;
    r.opt_positive(n, "dim_x", s.dim_x);
    r.opt_positive(n, "dim_y", s.dim_y);
    r.opt_range(n, "entries", s.entries);
    r.opt_range(n, "x_box", s.x_box);
    r.opt_range(n, "y_box", s.y_box);
    r.opt(n, "z0_fill", s.z0_fill);
    r.opt(n, "alpha", s.alpha);
    if (!(s.alpha > 0.0)) r.fail(n["alpha"], "'alpha' must be positive");
    spec.params = s;
    networked = false;
  } else if (family == "consensus_quadratic") {
    r.allow_keys(n, keys({"agents", "m", "graph", "targets", "box", "x0"}), "consensus_quadratic instance");
    catalog::ConsensusQuadraticSpec s;
    r.opt_positive(n, "agents", s.agents);
    r.opt_positive(n, "m", s.m);
    if (n["graph"]) s.graph = r.graph(n["graph"]);
    r.opt_reals(n, "targets", s.targets);
    if (!s.targets.empty() && static_cast<int>(s.targets.size()) != s.agents) {
      r.fail(n["targets"], "'targets' needs one value per agent");
    }
    r.opt_range(n, "box", s.box);
    r.opt_reals(n, "x0", s.x0);
    if (!s.x0.empty() && static_cast<int>(s.x0.size()) != s.agents) r.fail(n["x0"], "'x0' needs one value per agent");
    spec.params = s;
    networked = true;
  } else if (family == "allocation_logistic") {
    r.allow_keys(n, keys({"agents", "graph", "box", "a", "b", "c", "w", "d", "max_redraws"}),
                 "allocation_logistic instance");
    catalog::AllocationLogisticSpec s;
    r.opt_positive(n, "agents", s.agents);
    if (n["graph"]) s.graph = r.graph(n["graph"]);
    r.opt_range(n, "box", s.box);
    r.opt_range(n, "a", s.a);
    r.opt_range(n, "b", s.b);
    r.opt_range(n, "c", s.c);
    r.opt_range(n, "w", s.w);
    r.opt_range(n, "d", s.d);
    if (s.b.lo < 0.0) r.fail(n["b"], "'b' must be nonnegative (convexity)");
    r.opt(n, "max_redraws", s.max_redraws);
    spec.params = s;
    networked = true;
  } else if (family == "custom") {
    std::string problem = "saddle";
    r.opt(n, "problem", problem);
    if (problem == "saddle") {
      r.allow_keys(n, keys({"problem", "matrix", "x_quad", "y_quad", "x_box", "y_box", "z0", "corrupt_grad"}),
                   "custom saddle instance");
      catalog::CustomSaddleSpec s;
      const auto m = n["matrix"];
      if (!m || !m.IsSequence() || m.size() == 0) r.fail(m ? m : n, "custom saddle needs a nonempty 'matrix'");
      std::vector<std::vector<double>> rows;
      for (const auto& row : m) rows.push_back(r.reals(row, "matrix"));
      for (const auto& row : rows) {
        if (row.size() != rows[0].size() || row.empty()) r.fail(m, "'matrix' rows must be nonempty and equal length");
      }
      s.matrix.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
      for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) s.matrix(i, j) = rows[i][j];
      r.opt(n, "x_quad", s.x_quad);
      r.opt(n, "y_quad", s.y_quad);
      if (s.x_quad < 0.0) r.fail(n["x_quad"], "'x_quad' must be nonnegative");
      if (s.y_quad < 0.0) r.fail(n["y_quad"], "'y_quad' must be nonnegative");
      if (n["x_box"]) s.x_box = r.range(n["x_box"], "x_box");
      if (n["y_box"]) s.y_box = r.range(n["y_box"], "y_box");
      if (n["z0"]) {
        const auto z0 = r.reals(n["z0"], "z0");
        if (static_cast<Eigen::Index>(z0.size()) != s.matrix.rows() + s.matrix.cols()) {
          r.fail(n["z0"], "'z0' must have dim_x + dim_y = " + std::to_string(s.matrix.rows() + s.matrix.cols()) +
                              " entries");
        }
        s.z0 = Eigen::Map<const Vector>(z0.data(), static_cast<Eigen::Index>(z0.size()));
      }
      r.opt(n, "corrupt_grad", s.corrupt_grad);
      spec.params = s;
      networked = false;
    } else if (problem == "allocation") {
      r.allow_keys(n, keys({"problem", "graph", "c", "w", "d", "box"}), "custom allocation instance");
      catalog::CustomAllocationSpec s;
      if (n["graph"]) s.graph = r.graph(n["graph"]);
      if (!n["c"]) r.fail(n, "custom allocation needs 'c'");
      s.c = r.reals(n["c"], "c");
      s.w = n["w"] ? r.reals(n["w"], "w") : std::vector<double>(s.c.size(), 1.0);
      s.d = n["d"] ? r.reals(n["d"], "d") : std::vector<double>(s.c.size(), 0.0);
      if (s.w.size() != s.c.size()) r.fail(n["w"], "'w' must match 'c' in length");
      if (s.d.size() != s.c.size()) r.fail(n["d"], "'d' must match 'c' in length");
      r.opt_range(n, "box", s.box);
      spec.params = s;
      networked = true;
    } else {
      r.fail(n["problem"], "custom 'problem' must be saddle or allocation");
    }
  } else {
    r.fail(n["family"], "unknown family '" + family +
                            "' (expected bilinear_box, consensus_quadratic, allocation_logistic or custom)");
  }
  return spec;
}

const std::vector<std::pair<PresetInfo, std::string>>& presets() {
  static const std::vector<std::pair<PresetInfo, std::string>> table = {
      {{"example1", "bilinear x^T B y on boxes, B ~ U[0,5]^{10x10}; GDA, OGDA, EG for 5000 iterations"},
       R"(instance:
  family: bilinear_box
  name: example1
  seed: 1
  dim_x: 10
  dim_y: 10
  entries: [0, 5]
  x_box: [-5, 5]
  y_box: [-2, 2]
  z0_fill: 10
  alpha: 0.01
methods: [GDA, OGDA, EG]
solver:
  iters: 5000
  stop_tol: 0
  record_every: 1
output: out/example1
)"},
      {{"example2", "distributed allocation, 20-agent ring, logistic costs; OGDA and EG on 1e6 gradient calls"},
       R"(instance:
  family: allocation_logistic
  name: example2
  seed: 1
  agents: 20
  graph: ring
  box: [-1, 1]
methods: [OGDA, EG]
solver:
  stop_tol: 1.0e-10
  record_every: 1000
compare: true
grad_budget: 1000000
output: out/example2
verify:
  certificate_iters: 5000
)"},
      {{"consensus", "distributed consensus, f_i(s) = (s - i)^2 on a 5-agent ring; s* = 3"},
       R"(instance:
  family: consensus_quadratic
  name: consensus
  agents: 5
  m: 1
  graph: ring
  box: [-10, 10]
methods: [OGDA, EG]
solver:
  iters: 100000
  stop_tol: 1.0e-10
  record_every: 100
output: out/consensus
)"},
      {{"quadratic", "f = x^2/2 - y^2/2, saddle at the origin"},
       R"(instance:
  family: custom
  name: quadratic
  problem: saddle
  matrix: [[0]]
  x_quad: 1
  y_quad: 1
  z0: [1, 1]
methods: [GDA, OGDA, EG]
solver:
  iters: 5000
  stop_tol: 0
output: out/quadratic
)"},
      {{"bilinear", "f = xy unconstrained; GDA spirals outward, OGDA and EG converge"},
       R"(instance:
  family: custom
  name: bilinear
  problem: saddle
  matrix: [[1]]
  z0: [1, 1]
methods: [OGDA, EG]
solver:
  iters: 5000
  stop_tol: 1.0e-10
output: out/bilinear
)"},
      {{"allocation3", "h_i = (y - c_i)^2/2, c = (1,2,3), sum y = 0 on a 3-agent ring; y* = (-1,0,1)"},
       R"(instance:
  family: custom
  name: allocation3
  problem: allocation
  graph: ring
  c: [1, 2, 3]
  w: [1, 1, 1]
  d: [0, 0, 0]
  box: [-10, 10]
methods: [OGDA, EG]
solver:
  iters: 20000
  stop_tol: 1.0e-10
  record_every: 10
output: out/allocation3
)"},
      {{"corrupted", "negative control: grad_x off by 10%; verify must fail"},
       R"(instance:
  family: custom
  name: corrupted
  problem: saddle
  matrix: [[1, 2], [-1, 0.5]]
  x_box: [-1, 1]
  y_box: [-1, 1]
  z0: [0.5, 0.5, 0.5, 0.5]
  corrupt_grad: 0.1
methods: [OGDA, EG]
solver:
  iters: 1000
output: out/corrupted
)"},
  };
  return table;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  const Reader r(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ValidationError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw ValidationError(source + ":1: config must be a mapping");
  r.allow_keys(root, {"instance", "methods", "solver", "compare", "grad_budget", "output", "jobs", "verify"}, "config");
  if (!root["instance"]) throw ValidationError(source + ":1: config needs an 'instance' section");

  ExperimentConfig cfg;
  bool networked = false;
  cfg.instance = parse_instance(r, root["instance"], networked);

  if (const auto m = root["methods"]) {
    if (!m.IsSequence()) r.fail(m, "'methods' must be a list");
    if (m.size() == 0) r.fail(m, "'methods' is empty; list at least one of GDA, OGDA, EG");
    for (const auto& e : m) {
      Method method;
      try {
        method = parse_method(r.get<std::string>(e, "methods"));
      } catch (const ValidationError& err) {
        r.fail(e, err.what());
      }
      if (networked && method == Method::GDA) r.fail(e, "GDA is not defined for distributed instances");
      for (Method seen : cfg.methods) {
        if (seen == method) r.fail(e, "method " + to_string(method) + " listed twice");
      }
      cfg.methods.push_back(method);
    }
  } else if (networked) {
    cfg.methods = {Method::OGDA, Method::EG};
  } else {
    cfg.methods = {Method::GDA, Method::OGDA, Method::EG};
  }

  if (const auto s = root["solver"]) {
    r.expect_map(s, "solver");
    r.allow_keys(s, {"alpha", "iters", "stop_tol", "record_every", "allow_unsafe_step"}, "solver");
    r.opt(s, "alpha", cfg.alpha);
    if (cfg.alpha < 0.0) r.fail(s["alpha"], "'alpha' must be positive (or 0 for the default)");
    r.opt(s, "iters", cfg.iters);
    if (cfg.iters < 0) r.fail(s["iters"], "'iters' must be >= 0");
    r.opt(s, "stop_tol", cfg.stop_tol);
    if (cfg.stop_tol < 0.0) r.fail(s["stop_tol"], "'stop_tol' must be >= 0");
    r.opt_positive(s, "record_every", cfg.record_every);
    r.opt(s, "allow_unsafe_step", cfg.allow_unsafe_step);
  }
  r.opt(root, "compare", cfg.compare);
  r.opt(root, "grad_budget", cfg.grad_budget);
  if (cfg.compare && cfg.grad_budget <= 0) {
    r.fail(root["compare"], "comparison mode needs a positive 'grad_budget'");
  }
  r.opt(root, "output", cfg.out_dir);
  r.opt_positive(root, "jobs", cfg.jobs);
  if (const auto v = root["verify"]) {
    r.expect_map(v, "verify");
    r.allow_keys(v, {"samples", "fd_points", "equivalence_iters", "fixed_point_steps", "certificate_iters"}, "verify");
    r.opt_positive(v, "samples", cfg.verify.samples);
    r.opt_positive(v, "fd_points", cfg.verify.fd_points);
    r.opt_positive(v, "equivalence_iters", cfg.verify.equivalence_iters);
    r.opt_positive(v, "fixed_point_steps", cfg.verify.fixed_point_steps);
    r.opt_positive(v, "certificate_iters", cfg.verify.certificate_iters);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

std::vector<PresetInfo> list_presets() {
  std::vector<PresetInfo> out;
  for (const auto& [info, yaml] : presets()) out.push_back(info);
  return out;
}

std::string preset_yaml(std::string_view name) {
  for (const auto& [info, yaml] : presets()) {
    if (info.name == name) return yaml;
  }
  std::string known;
  for (const auto& [info, yaml] : presets()) known += (known.empty() ? "" : ", ") + info.name;
  throw ValidationError("unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

ExperimentConfig preset(std::string_view name) {
  return parse_config(preset_yaml(name), "preset:" + std::string(name));
}

}  // namespace saddlenet::harness
