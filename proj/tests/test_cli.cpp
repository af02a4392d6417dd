#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "besovreg/cli/commands.hpp"
#include "besovreg/cli/config.hpp"

using namespace besovreg;
using namespace besovreg::cli;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("besovreg_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const fs::path& dir, const std::string& text) {
  const fs::path path = dir / "run.cfg";
  std::ofstream(path) << text;
  return path.string();
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int config_error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

const char* kBaseConfig = R"([problem]
d = 1
s = 2
p = 2
q = 2

[estimator]
sigma = 0.1

[sweep]
n = 8
n_list = 5, 6, 7
sigma_list = 0.05, 0.1, 0.2
trials = 2
seed = 4

[target]
name = cusp
)";

}  // namespace

TEST_CASE("parse_config: sections, lists and defaults", "[cli]") {
  const ExperimentConfig c = parse_config(kBaseConfig);
  CHECK(c.estimator.s == 2.0);
  CHECK(c.estimator.sigma == 0.1);
  CHECK(c.sweep.n_list == std::vector<int>{5, 6, 7});
  CHECK(c.sweep.sigma_list.size() == 3);
  CHECK(c.sweep.trials == 2);
  CHECK(c.target.name == "cusp");
  CHECK(c.target_given);
  CHECK(c.output.directory == "out");
  CHECK(c.problem_line == 1);
  CHECK(c.to_json().at("estimator").at("beta") == 2.5);
  const ExperimentConfig inf = parse_config("[problem]\nq = 2\np = inf\ns = 1\n");
  CHECK(std::isinf(inf.estimator.p));
}

TEST_CASE("parse_config: errors carry the offending line", "[cli]") {
  CHECK(config_error_line("[problem]\nd = 1\nbogus = 3\n") == 3);
  CHECK(config_error_line("[problem]\ns = two\n") == 2);
  CHECK(config_error_line("# comment\n[nowhere]\n") == 2);
  CHECK(config_error_line("d = 1\n") == 1);
  CHECK(config_error_line("[problem]\ns = 1\ns = 2\n") == 3);
  CHECK(config_error_line("[sweep]\n\nn_list = 3, x\n") == 3);
  CHECK(config_error_line("[sweep]\nnoise = cauchy\n") == 2);
  CHECK(config_error_line("[problem]\nd = 1\n[target]\nname = cusp\nwidht = 2\n") == 3);
  CHECK(config_error_line(kBaseConfig) == -1);
  // semantic violations point at [problem]
  try {
    check_config(parse_config("\n[problem]\ns = 0.25\np = 2\n"));
    FAIL("expected a compact embedding error");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("compact embedding") != std::string::npos);
  }
}

TEST_CASE("run: usage errors exit 2, help exits 0", "[cli]") {
  CHECK(invoke({}).code == kExitConfig);
  CHECK(invoke({"frobnicate"}).code == kExitConfig);
  CHECK(invoke({"validate", "nonsense"}).code == kExitConfig);
  CHECK(invoke({"--help"}).code == kExitOk);
  const Run missing = invoke({"--config", "/nonexistent/run.cfg", "estimate"});
  CHECK(missing.code == kExitConfig);
  CHECK(missing.err.find("cannot read") != std::string::npos);
}

TEST_CASE("run: validate suites exit 0 and write manifests", "[cli]") {
  for (const std::string suite : {"thresh", "lemmas", "fooling"}) {
    const fs::path dir = scratch("validate_" + suite);
    const Run r = invoke({"validate", suite, "--out", dir.string()});
    INFO(r.err);
    CHECK(r.code == kExitOk);
    CHECK(fs::exists(dir / "manifest.json"));
  }
}

TEST_CASE("run: estimate writes artifacts and flags Step 0", "[cli]") {
  const fs::path dir = scratch("estimate");
  const std::string cfg = write_config(dir, kBaseConfig);
  const Run r = invoke({"--config", cfg, "--out", (dir / "a").string(), "estimate"});
  REQUIRE(r.code == kExitOk);
  for (const char* name : {"estimate.bin", "estimate.json", "report.json", "manifest.json"}) {
    CHECK(fs::exists(dir / "a" / name));
  }
  const auto report = nlohmann::json::parse(slurp(dir / "a" / "report.json"));
  CHECK(report.at("step0_zero") == false);
  CHECK(report.at("lq_error").get<double>() < 0.05);
  const auto manifest = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
  CHECK(manifest.at("command") == "estimate");
  CHECK(manifest.at("seed") == 4);
  CHECK(manifest.at("primary_regime") == true);

  // same seed, different thread count: identical output
  const Run again = invoke({"--config", cfg, "--out", (dir / "b").string(), "--threads", "3", "estimate"});
  REQUIRE(again.code == kExitOk);
  CHECK(slurp(dir / "a" / "estimate.bin") == slurp(dir / "b" / "estimate.bin"));

  // observations file with sigma^2 >= m: zero function
  nlohmann::json obs{{"n", 4}, {"d", 1}, {"sigma", 4.0}, {"values", std::vector<double>(16, 1.0)}};
  std::ofstream(dir / "obs.json") << obs.dump();
  const Run zero = invoke({"--config", cfg, "--out", (dir / "c").string(), "estimate", "--observations",
                           (dir / "obs.json").string()});
  REQUIRE(zero.code == kExitOk);
  const auto zr = nlohmann::json::parse(slurp(dir / "c" / "report.json"));
  CHECK(zr.at("step0_zero") == true);
  CHECK(zr.at("flags") == nlohmann::json::array({"step0-zero"}));

  // too coarse for the polynomial order: input error
  obs = {{"n", 3}, {"d", 1}, {"sigma", 0.1}, {"values", std::vector<double>(8, 1.0)}};
  std::ofstream(dir / "coarse.json") << obs.dump();
  CHECK(invoke({"--config", cfg, "--out", (dir / "d").string(), "estimate", "--observations",
                (dir / "coarse.json").string()})
            .code == kExitConfig);
}

TEST_CASE("run: sweeps write the CSV schema and a rate fit", "[cli]") {
  const fs::path dir = scratch("sweep");
  const std::string cfg = write_config(dir, kBaseConfig);
  const Run r = invoke({"--config", cfg, "--out", dir.string(), "sweep-m"});
  REQUIRE(r.code == kExitOk);
  const std::string csv = slurp(dir / "results.csv");
  CHECK(csv.rfind("experiment_id,d,s,p,q,r,beta,kappa,n,m,sigma,seed,trial,lq_error,runtime_ms\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 2);
  const auto fit = nlohmann::json::parse(slurp(dir / "fit.json"));
  CHECK(fit.contains("slope"));

  const fs::path jdir = scratch("sweep_json");
  const Run js = invoke({"--config", cfg, "--out", jdir.string(), "--format", "json", "sweep-sigma"});
  REQUIRE(js.code == kExitOk);
  CHECK(nlohmann::json::parse(slurp(jdir / "results.json")).size() == 3 * 2);

  const std::string short_cfg = write_config(scratch("sweep_short"),
                                             std::string(kBaseConfig) + "\n[output]\ndirectory = " +
                                                 (dir / "short").string() + "\n");
  std::string text = slurp(short_cfg);
  text.replace(text.find("n_list = 5, 6, 7"), 16, "n_list = 5, 6");
  std::ofstream(short_cfg) << text;
  const Run too_few = invoke({"--config", short_cfg, "sweep-m"});
  CHECK(too_few.code == kExitConfig);
  CHECK(too_few.err.find(">= 3 points") != std::string::npos);
}

TEST_CASE("run: replay reproduces a sweep", "[cli]") {
  const fs::path dir = scratch("replay");
  const std::string cfg = write_config(dir, kBaseConfig);
  REQUIRE(invoke({"--config", cfg, "--out", (dir / "run").string(), "sweep-sigma"}).code == kExitOk);
  const Run r = invoke({"replay", (dir / "run").string()});
  INFO(r.out << r.err);
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("replay: identical") != std::string::npos);

  // tampering with a result row is detected
  std::string csv = slurp(dir / "run" / "results.csv");
  const auto pos = csv.find("\n", csv.find("\n") + 1) - 1;
  csv[pos - 30] = csv[pos - 30] == '1' ? '2' : '1';
  std::ofstream(dir / "run" / "results.csv", std::ios::binary) << csv;
  CHECK(invoke({"replay", (dir / "run").string()}).code == kExitValidation);
}

TEST_CASE("run: pack, fooling and besov-estimate fixtures", "[cli]") {
  const fs::path dir = scratch("fixtures");
  const std::string cfg = write_config(dir, std::string(kBaseConfig) + "\n[fixture]\nn_cells = 4\n");
  CHECK(invoke({"--config", cfg, "--out", (dir / "pack").string(), "pack"}).code == kExitOk);
  CHECK(invoke({"--config", cfg, "--out", (dir / "fool").string(), "fooling"}).code == kExitOk);
  const Run b = invoke({"--config", cfg, "--out", (dir / "besov").string(), "besov-estimate"});
  INFO(b.err);
  CHECK(b.code == kExitOk);
  const std::string bad = write_config(scratch("fixtures_bad"),
                                       std::string(kBaseConfig) + "\n[fixture]\nn_cells = 1\n");
  const Run budget = invoke({"--config", bad, "--out", (dir / "bad").string(), "pack"});
  CHECK(budget.code == kExitConfig);
}
