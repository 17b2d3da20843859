#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "helpers.hpp"
#include "saddlenet/harness.hpp"

using namespace saddlenet;
using namespace saddlenet::harness;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::string& yaml) {
  try {
    parse_config(yaml, "t.yaml");
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("config errors carry the line") {
  CHECK(error_of("instance:\n  family: custom\n  matrix: [[1]]\n  z0: [1, 1]\nmethods: []\n").rfind("t.yaml:5:", 0) == 0);
  CHECK(error_of("instance:\n  family: custom\n  matrix: [[1]]\n  z0: [1, 1]\n  colour: red\n").rfind("t.yaml:5:", 0) ==
        0);
  CHECK(error_of("instance:\n  family: bilinear_box\n  x_box: [3, 1]\n").rfind("t.yaml:3:", 0) == 0);
  CHECK(error_of("instance:\n  family: nonsense\n").rfind("t.yaml:2:", 0) == 0);
  CHECK(error_of("methods: [OGDA]\n").rfind("t.yaml:1:", 0) == 0);
  CHECK(error_of("instance:\n  family: consensus_quadratic\nmethods: [GDA]\n").find("GDA") != std::string::npos);
  CHECK(error_of("instance:\n  family: custom\n  matrix: [[1]]\n  z0: [1, 1]\nmethods: [EG, EG]\n").find("twice") !=
        std::string::npos);
  CHECK(error_of("instance: [1\n").rfind("t.yaml:", 0) == 0);
  CHECK(error_of("instance:\n  family: custom\n  matrix: [[1]]\n  z0: [1, 1]\nsolver:\n  iters: -4\n")
            .rfind("t.yaml:6:", 0) == 0);
}

TEST_CASE("method defaults depend on the family") {
  const auto s = parse_config("instance:\n  family: custom\n  matrix: [[1]]\n  z0: [1, 1]\n");
  CHECK(s.methods.size() == 3u);
  const auto n = parse_config("instance:\n  family: consensus_quadratic\n");
  CHECK(n.methods == std::vector<Method>{Method::OGDA, Method::EG});
}

TEST_CASE("every preset parses and builds") {
  const auto list = list_presets();
  CHECK(list.size() >= 2u);
  CHECK(list[0].name == "example1");
  CHECK(list[1].name == "example2");
  for (const auto& p : list) {
    CAPTURE(p.name);
    const auto cfg = preset(p.name);
    CHECK(cfg.instance.name == p.name);
    CHECK_FALSE(cfg.methods.empty());
  }
  CHECK_THROWS_AS(preset("nope"), ValidationError);
  const auto ex2 = preset("example2");
  CHECK(ex2.compare);
  CHECK(iterations_for(ex2, Method::OGDA) == 1000000);
  CHECK(iterations_for(ex2, Method::EG) == 500000);
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(ValidationError("x")) == kExitValidation);
  CHECK(exit_code_for(ContractError("x")) == kExitValidation);
  CHECK(exit_code_for(DivergenceError("x")) == kExitDivergence);
  CHECK(exit_code_for(InvariantError("x")) == kExitInvariant);
}

TEST_CASE("solve writes identical files twice") {
  const fs::path root = fs::temp_directory_path() / "saddlenet_harness_test";
  fs::remove_all(root);
  auto cfg = preset("quadratic");
  cfg.iters = 300;
  cfg.jobs = 3;
  cfg.out_dir = (root / "a").string();
  const auto ra = cmd_solve(cfg);
  CHECK(ra.exit_code == kExitOk);
  REQUIRE(ra.runs.size() == 3u);
  cfg.out_dir = (root / "b").string();
  cfg.jobs = 1;
  cmd_solve(cfg);
  for (const char* f : {"gda.csv", "ogda.csv", "eg.csv", "reference.yaml"}) {
    CAPTURE(f);
    const auto a = slurp(root / "a" / f);
    CHECK_FALSE(a.empty());
    CHECK(a == slurp(root / "b" / f));
  }
  const auto header = slurp(root / "a" / "ogda.csv").substr(0, 60);
  CHECK(header.rfind("iter,f_value,vi_residual", 0) == 0);
  fs::remove_all(root);
}

TEST_CASE("verify passes on the shipped presets and names the failing check on the corrupted one") {
  for (const char* name : {"quadratic", "allocation3"}) {
    CAPTURE(name);
    auto cfg = preset(name);
    cfg.out_dir = (fs::temp_directory_path() / "saddlenet_verify_test" / name).string();
    const auto rep = cmd_verify(cfg);
    for (const auto& c : rep.checks) {
      CAPTURE(c.name);
      CAPTURE(c.detail);
      CHECK(c.passed);
    }
  }
  auto cfg = preset("corrupted");
  cfg.out_dir = (fs::temp_directory_path() / "saddlenet_verify_test" / "corrupted").string();
  const auto rep = cmd_verify(cfg);
  CHECK_FALSE(rep.passed());
  bool named = false;
  for (const auto& c : rep.checks)
    if (!c.passed && (c.name == "gradient_fd" || c.name == "monotone")) named = true;
  CHECK(named);
  CHECK(report_yaml(rep).find("gradient_fd") != std::string::npos);
  fs::remove_all(fs::temp_directory_path() / "saddlenet_verify_test");
}
