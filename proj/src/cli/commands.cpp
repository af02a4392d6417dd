#include "besovreg/cli/commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "besovreg/analysis.hpp"
#include "besovreg/cli/config.hpp"
#include "besovreg/error.hpp"
#include "besovreg/oracles.hpp"
#include "besovreg/parallel.hpp"
#include "besovreg/serialize.hpp"
#include "besovreg/shrinkage.hpp"

namespace besovreg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class ValidationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string format = "csv";
  std::string observations;
  std::string suite;
  std::string replay_dir;
};

struct Context {
  Options options;
  ExperimentConfig config;
  ConfigCheck check;
  bool has_config = false;
  std::ostream& out;
  std::ostream& err;
  json rows_provenance = json::array();
  json outputs = json::object();
};

std::string format_double(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_output(Context& ctx, const std::string& name, const std::string& bytes) {
  const fs::path dir(ctx.options.out_dir);
  fs::create_directories(dir);
  std::ofstream file(dir / name, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write '" + (dir / name).string() + "'");
  file << bytes;
  ctx.outputs[name] = fnv1a_hex(bytes);
}

json environment() {
  return {
#if defined(__VERSION__)
      {"compiler", __VERSION__},
#endif
      {"cplusplus", static_cast<long>(__cplusplus)},
      {"hardware_concurrency", std::thread::hardware_concurrency()},
#if defined(__linux__)
      {"platform", "linux"},
#elif defined(__APPLE__)
      {"platform", "darwin"},
#else
      {"platform", "other"},
#endif
  };
}

void write_manifest(Context& ctx, const std::string& command, const json& extra = json::object()) {
  json manifest;
  manifest["artifact"] = "besovreg";
  manifest["version"] = kVersion;
  manifest["command"] = command;
  if (!ctx.options.suite.empty()) manifest["suite"] = ctx.options.suite;
  manifest["seed"] = ctx.config.sweep.seed;
  manifest["threads"] = ctx.options.threads;
  manifest["format"] = ctx.options.format;
  if (!ctx.options.observations.empty()) {
    manifest["observations"] = fs::absolute(ctx.options.observations).string();
  }
  if (ctx.has_config) {
    manifest["config_source"] = ctx.config.source;
    manifest["config"] = ctx.config.to_json();
    manifest["primary_regime"] = ctx.check.primary_regime;
    manifest["warnings"] = ctx.check.warnings;
  }
  manifest["environment"] = environment();
  manifest["rows"] = ctx.rows_provenance;
  manifest["outputs"] = ctx.outputs;
  manifest.update(extra);
  const fs::path dir(ctx.options.out_dir);
  fs::create_directories(dir);
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

void require_config(const Context& ctx, const std::string& command) {
  if (!ctx.has_config) throw ConfigError(0, "'" + command + "' requires --config");
}

void print_warnings(Context& ctx) {
  for (const auto& w : ctx.check.warnings) ctx.err << "warning: " << w << '\n';
}

// ---------------------------------------------------------------------------
// estimate

ObservationSet read_observations(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(0, "observations file '" + path + "': " + e.what());
  }
  for (const char* key : {"n", "d", "values"}) {
    if (!j.contains(key)) throw ConfigError(0, std::string("observations file lacks '") + key + "'");
  }
  const int n = j.at("n").get<int>();
  const int d = j.at("d").get<int>();
  auto values = j.at("values").get<std::vector<double>>();
  SampleGrid grid = build_grid(n, d);
  if (values.size() != grid.size()) {
    throw ConfigError(0, "observations: expected " + std::to_string(grid.size()) + " values, got " +
                             std::to_string(values.size()));
  }
  const double sigma = j.value("sigma", 0.0);
  return observations_from_values(std::move(grid), std::move(values), sigma);
}

int cmd_estimate(Context& ctx) {
  require_config(ctx, "estimate");
  const ExperimentConfig& cfg = ctx.config;
  EstimatorConfig est = cfg.estimator;
  const bool synthetic = ctx.options.observations.empty();
  std::optional<FunctionOracle> oracle;
  if (synthetic || cfg.target_given) oracle = make_target(cfg.target, est.d);

  const auto start = std::chrono::steady_clock::now();
  ObservationSet obs = synthetic ? observe(*oracle, build_grid(cfg.sweep.n, est.d), est.sigma,
                                           cfg.sweep.noise, cfg.sweep.seed, ctx.options.threads)
                                 : read_observations(ctx.options.observations);
  if (!synthetic) {
    if (obs.grid.dim() != est.d) throw ConfigError(0, "observations dimension differs from [problem] d");
    est.sigma = obs.sigma;
  }
  const EstimateResult result = estimate_detailed(obs, est, ctx.options.threads);
  const double runtime =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

  std::ostringstream binary;
  write_binary(binary, result.estimate);
  write_output(ctx, "estimate.bin", binary.str());
  write_output(ctx, "estimate.json", to_json(result.estimate).dump() + "\n");

  json report;
  report["n"] = obs.grid.level();
  report["m"] = obs.grid.size();
  report["sigma"] = est.sigma;
  report["step0_zero"] = result.step0_zero;
  report["flags"] = result.step0_zero ? json::array({"step0-zero"}) : json::array();
  report["output_hash"] = fnv1a_hex(binary.str());
  report["warnings"] = result.warnings;
  report["runtime_ms"] = runtime;
  if (!result.step0_zero) {
    report["epsilon"] = result.schedule.epsilon;
    report["k_star"] = result.schedule.k_star ? json(*result.schedule.k_star) : json("inf");
    report["beta"] = result.schedule.beta;
    report["lambdas"] = result.schedule.lambdas;
    report["zeroed_fraction"] = result.zeroed_fraction;
  }
  if (oracle) {
    const int r = est.order();
    report["lq_error"] = number(lq_distance(*oracle, result.estimate, est.q,
                                            QuadratureSpec::for_grid(obs.grid.level(), r, est.q)));
    report["target"] = oracle->descriptor;
  }
  write_output(ctx, "report.json", report.dump(2) + "\n");
  ctx.rows_provenance.push_back({{"setting", 0}, {"trial", 0}, {"seed", obs.seed}, {"runtime_ms", runtime}});
  write_manifest(ctx, "estimate");
  ctx.out << report.dump(2) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweeps

const char* kCsvHeader =
    "experiment_id,d,s,p,q,r,beta,kappa,n,m,sigma,seed,trial,lq_error,runtime_ms";

int cmd_sweep(Context& ctx, SweepAxis axis) {
  const std::string name = axis == SweepAxis::m ? "sweep-m" : "sweep-sigma";
  require_config(ctx, name);
  const ExperimentConfig& cfg = ctx.config;
  const EstimatorConfig& est = cfg.estimator;
  const std::size_t points = axis == SweepAxis::m ? cfg.sweep.n_list.size() : cfg.sweep.sigma_list.size();
  if (points < 3) {
    throw ConfigError(0, name + ": >= 3 points required (" +
                             (axis == SweepAxis::m ? "n_list" : "sigma_list") + ")");
  }
  const FunctionOracle oracle = make_target(cfg.target, est.d);
  RiskSweep sweep;
  sweep.axis = axis;
  sweep.n_list = cfg.sweep.n_list;
  sweep.sigma_list = cfg.sweep.sigma_list;
  sweep.fixed_n = cfg.sweep.n;
  sweep.fixed_sigma = est.sigma;
  sweep.trials = cfg.sweep.trials;
  sweep.seed = cfg.sweep.seed;
  sweep.noise = cfg.sweep.noise;
  sweep.threads = ctx.options.threads;
  const std::vector<RiskPoint> curve = risk_curve(est, oracle, sweep);

  const double beta = est.beta ? *est.beta : default_beta(est);
  const int r = est.order();
  std::ostringstream csv;
  json rows = json::array();
  csv << kCsvHeader << '\n';
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const RiskPoint& point = curve[i];
    for (std::size_t t = 0; t < point.trials.size(); ++t) {
      const RiskTrial& trial = point.trials[t];
      csv << cfg.output.experiment_id << ',' << est.d << ',' << format_double(est.s) << ','
          << format_double(est.p) << ',' << format_double(est.q) << ',' << r << ','
          << format_double(beta) << ',' << format_double(est.kappa) << ',' << point.n << ','
          << format_double(point.m) << ',' << format_double(point.sigma) << ',' << trial.seed << ','
          << t << ',' << format_double(trial.lq_error) << ',' << format_double(trial.runtime_ms)
          << '\n';
      rows.push_back({{"experiment_id", cfg.output.experiment_id}, {"d", est.d}, {"s", est.s},
                      {"p", number(est.p)}, {"q", number(est.q)}, {"r", r}, {"beta", beta},
                      {"kappa", est.kappa}, {"n", point.n}, {"m", point.m}, {"sigma", point.sigma},
                      {"seed", trial.seed}, {"trial", t}, {"lq_error", trial.lq_error},
                      {"runtime_ms", trial.runtime_ms}});
      ctx.rows_provenance.push_back(
          {{"setting", i}, {"trial", t}, {"seed", trial.seed}, {"runtime_ms", trial.runtime_ms}});
    }
  }
  if (ctx.options.format == "json") {
    write_output(ctx, "results.json", rows.dump(1) + "\n");
  } else {
    write_output(ctx, "results.csv", csv.str());
  }

  std::vector<std::pair<double, double>> pairs;
  json summary = json::array();
  for (const auto& point : curve) {
    const double x = axis == SweepAxis::m ? point.m : point.sigma * point.sigma / point.m;
    pairs.emplace_back(x, point.mean);
    summary.push_back({{"n", point.n}, {"m", point.m}, {"sigma", point.sigma}, {"mean", point.mean},
                       {"stddev", point.stddev}});
  }
  json fit_json;
  fit_json["axis"] = axis == SweepAxis::m ? "m" : "sigma^2/m";
  fit_json["points"] = summary;
  std::optional<double> theory;
  if (axis == SweepAxis::m && est.sigma == 0.0) {
    theory = -est.s / est.d + std::max(0.0, 1.0 / est.p - 1.0 / est.q);
  } else if (axis == SweepAxis::sigma) {
    theory = est.s / (2 * est.s + est.d);
  }
  fit_json["theoretical_slope"] = theory ? json(*theory) : json(nullptr);
  try {
    const RateFit fit = rate_fit(pairs);
    fit_json["slope"] = fit.slope;
    fit_json["intercept"] = fit.intercept;
    fit_json["r_squared"] = fit.r_squared;
    ctx.out << name << ": fitted slope " << fit.slope;
  } catch (const DomainError& e) {
    fit_json["slope"] = nullptr;
    fit_json["fit_error"] = e.what();
    ctx.out << name << ": no fit (" << e.what() << ")";
  }
  if (theory) ctx.out << ", theoretical slope " << *theory;
  ctx.out << '\n';
  write_output(ctx, "fit.json", fit_json.dump(2) + "\n");
  write_manifest(ctx, name);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// validate

struct SuiteResult {
  bool passed = true;
  json report;
};

void check(SuiteResult& result, bool condition, const std::string& label, std::ostream& out) {
  out << (condition ? "  ok    " : "  FAIL  ") << label << '\n';
  result.passed = result.passed && condition;
}

SuiteResult suite_thresh(std::uint64_t seed, std::ostream& out) {
  SuiteResult result;
  const SuiteCount det = deterministic_suite(100000, seed);
  const SuiteCount point = pointwise_suite(1000000, seed + 1);
  check(result, det.passed(),
        "deterministic bound: " + std::to_string(det.violations) + " violations / " +
            std::to_string(det.instances),
        out);
  check(result, point.passed(),
        "pointwise estimate: " + std::to_string(point.violations) + " violations / " +
            std::to_string(point.instances),
        out);
  result.report = {{"deterministic", {{"instances", det.instances}, {"violations", det.violations}}},
                   {"pointwise", {{"instances", point.instances}, {"violations", point.violations}}}};
  return result;
}

SuiteResult suite_tails(std::uint64_t seed, unsigned threads, std::ostream& out) {
  SuiteResult result;
  const std::vector<double> lambdas{0.0, 1.0, 2.0};
  const auto norms = mc_tail_norms(lambdas, 1.0, 4096, 2.0, 100000, seed, threads);
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const TailSlope slope = tail_slope(lambdas[i], norms[i], 1.0, 2.0);
    check(result, slope.slope <= -0.125,
          "lambda=" + format_double(lambdas[i]) + " slope " + format_double(slope.slope) +
              (slope.t_branch ? " (T branch)" : "") + " <= -1/8",
          out);
    result.report["slopes"].push_back(
        {{"lambda", lambdas[i]}, {"slope", slope.slope}, {"points", slope.points},
         {"t_branch", slope.t_branch}});
  }
  const std::vector<double> grid{0.5, 1.0, 1.5};
  const auto vanished = mc_tail(1e9, 1.0, 64, 2.0, grid, 1000, seed, threads);
  const bool all_zero = std::all_of(vanished.begin(), vanished.end(),
                                    [](const TailRow& r) { return r.exceedances == 0; });
  check(result, all_zero, "huge lambda: no exceedances", out);
  return result;
}

SuiteResult suite_lemmas(std::ostream& out) {
  SuiteResult result;
  const std::vector<double> q_list{1.0, 2.0, 4.0};
  std::vector<double> a_grid, tau_grid;
  for (int i = 0; i <= 80; ++i) a_grid.push_back(0.25 * i);
  for (int i = 0; i <= 99; ++i) tau_grid.push_back(1.0 + i);
  const LemmaReport report = quadrature_lemma_checks(q_list, a_grid, tau_grid);
  for (const auto& row : report.moments) {
    check(result, row.bounded && row.monotone_tail,
          "moment tail q=" + format_double(row.q) + ": sup " + format_double(row.sup_scaled), out);
  }
  const bool series_ok = std::all_of(report.series.begin(), report.series.end(),
                                     [](const auto& r) { return r.finite && r.stable; });
  check(result, series_ok, "series ratio finite and stable on " + std::to_string(report.series.size()) +
                               " (a,b,c) triples",
        out);
  const SuiteCount shift = gaussian_shift_sweep();
  check(result, shift.passed(),
        "gaussian shift: " + std::to_string(shift.violations) + " failures / " +
            std::to_string(shift.instances),
        out);
  result.report = to_json(report);
  result.report["gaussian_shift"] = {{"instances", shift.instances}, {"violations", shift.violations}};
  return result;
}

SuiteResult suite_packing(std::uint64_t seed, std::ostream& out) {
  SuiteResult result;
  PackingOptions options;
  options.seed = seed;
  const PackingFamily family = calibrate_packing_family(16, 2.0, 1, 2.0, 2.0, options);
  const int scanned = min_hamming_distance(family.signs.vectors);
  check(result, scanned == family.signs.min_distance && scanned >= 4,
        "P=16 min Hamming distance " + std::to_string(scanned) + " >= 4", out);
  check(result, family.size() >= 4, "family size " + std::to_string(family.size()) + " >= 4", out);
  check(result, family.max_seminorm <= 1.0,
        "max member seminorm " + format_double(family.max_seminorm) + " <= 1", out);
  check(result,
        std::abs(family.min_separation_measured - family.min_separation) <=
            1e-6 * family.min_separation,
        "measured separation matches closed form", out);
  result.report = manifest(family);
  return result;
}

SuiteResult suite_fooling(std::ostream& out) {
  SuiteResult result;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (int n = 3; n <= 7; ++n) {
    const FoolingPair pair = fooling_pair(build_grid(n, 1), 2.0, 2.0, 2.0, 1);
    check(result, pair.max_abs_grid_value == 0.0, "n=" + std::to_string(n) + " grid values exactly 0",
          out);
    lo = std::min(lo, pair.constant);
    hi = std::max(hi, pair.constant);
    result.report["pairs"].push_back(manifest(pair));
  }
  check(result, hi <= 1.3 * lo, "separation constant stable within 30%: [" + format_double(lo) +
                                    ", " + format_double(hi) + "]",
        out);
  return result;
}

int cmd_validate(Context& ctx) {
  const std::string& suite = ctx.options.suite;
  const std::uint64_t seed = ctx.config.sweep.seed;
  ctx.out << "suite " << suite << '\n';
  SuiteResult result;
  if (suite == "thresh") {
    result = suite_thresh(seed, ctx.out);
  } else if (suite == "tails") {
    result = suite_tails(seed, ctx.options.threads, ctx.out);
  } else if (suite == "lemmas") {
    result = suite_lemmas(ctx.out);
  } else if (suite == "packing") {
    result = suite_packing(seed, ctx.out);
  } else {
    result = suite_fooling(ctx.out);
  }
  result.report["suite"] = suite;
  result.report["passed"] = result.passed;
  if (!ctx.options.out_dir.empty()) {
    write_output(ctx, "validate_" + suite + ".json", result.report.dump(2) + "\n");
    write_manifest(ctx, "validate");
  }
  ctx.out << (result.passed ? "PASS" : "FAIL") << '\n';
  return result.passed ? kExitOk : kExitValidation;
}

// ---------------------------------------------------------------------------
// fixtures and seminorm

int cmd_pack(Context& ctx) {
  require_config(ctx, "pack");
  const auto& cfg = ctx.config;
  const auto& est = cfg.estimator;
  PackingOptions options;
  options.seed = cfg.sweep.seed;
  options.budget = cfg.fixture.budget;
  const PackingFamily family =
      cfg.fixture.gamma
          ? build_packing_family(cfg.fixture.n_cells, est.s, *cfg.fixture.gamma, est.d, est.q, est.p,
                                 options)
          : calibrate_packing_family(cfg.fixture.n_cells, est.s, est.d, est.q, est.p, options);
  json j = manifest(family);
  j["calibrated"] = !cfg.fixture.gamma;
  write_output(ctx, "packing.json", j.dump(2) + "\n");
  write_manifest(ctx, "pack");
  ctx.out << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_fooling(Context& ctx) {
  require_config(ctx, "fooling");
  const auto& est = ctx.config.estimator;
  const FoolingPair pair = fooling_pair(build_grid(ctx.config.sweep.n, est.d), est.s, est.p, est.q, est.d);
  const json j = manifest(pair);
  write_output(ctx, "fooling.json", j.dump(2) + "\n");
  write_manifest(ctx, "fooling");
  ctx.out << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_besov(Context& ctx) {
  require_config(ctx, "besov-estimate");
  const auto& cfg = ctx.config;
  const auto& est = cfg.estimator;
  const FunctionOracle oracle = make_target(cfg.target, est.d);
  const int r = est.order();
  const int k_max = cfg.fixture.k_max.value_or(8);
  BesovEstimate b;
  try {
    b = besov_seminorm_pwp(oracle.evaluator, est.d, est.s, est.p, r, k_max);
  } catch (const PreconditionError& e) {
    throw ConfigError(0, e.what());
  }
  json j{{"target", oracle.descriptor}, {"s", est.s}, {"p", number(est.p)}, {"r", r},
         {"k_max", k_max}, {"value", b.value}, {"argmax_level", b.argmax_level},
         {"distances", b.distances}};
  if (oracle.declared_smoothness) j["declared_smoothness"] = oracle.declared_smoothness(est.p);
  write_output(ctx, "besov.json", j.dump(2) + "\n");
  write_manifest(ctx, "besov-estimate");
  ctx.out << j.dump(2) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// replay

// Drops the runtime_ms column (wall-clock time is not reproducible).
std::string strip_runtime(const std::string& text, bool is_json) {
  if (is_json) {
    json rows = json::parse(text);
    for (auto& row : rows) row.erase("runtime_ms");
    return rows.dump();
  }
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) out << line.substr(0, line.rfind(',')) << '\n';
  return out.str();
}

int run_command(Context& ctx, const std::string& command);

int cmd_replay(Context& ctx) {
  const fs::path source(ctx.options.replay_dir);
  json manifest;
  try {
    manifest = json::parse(read_file(source / "manifest.json"));
  } catch (const std::exception& e) {
    throw ConfigError(0, std::string("replay: ") + e.what());
  }
  Context again{Options{}, ExperimentConfig{}, ConfigCheck{}, false, ctx.out, ctx.err, json::array(),
                json::object()};
  again.options.out_dir = ctx.options.out_dir.empty() ? (source / "replay").string() : ctx.options.out_dir;
  again.options.threads = ctx.options.threads;
  again.options.format = manifest.value("format", "csv");
  again.options.suite = manifest.value("suite", "");
  again.options.observations = manifest.value("observations", "");
  if (manifest.contains("config_source")) {
    again.config = parse_config(manifest.at("config_source").get<std::string>());
    again.has_config = true;
    again.check = check_config(again.config);
  }
  again.config.sweep.seed = manifest.at("seed").get<std::uint64_t>();
  const std::string command = manifest.at("command").get<std::string>();
  std::ostringstream sink;
  Context quiet{again.options, again.config, again.check, again.has_config, sink, ctx.err,
                json::array(), json::object()};
  const int code = run_command(quiet, command);
  if (code != kExitOk && command != "validate") return code;

  bool identical = true;
  for (const auto& [name, hash] : manifest.at("outputs").items()) {
    if (name == "report.json") continue;  // carries the wall-clock runtime
    const fs::path before = source / name;
    const fs::path after = fs::path(quiet.options.out_dir) / name;
    bool same = false;
    if (name.starts_with("results.")) {
      same = strip_runtime(read_file(before), name.ends_with(".json")) ==
             strip_runtime(read_file(after), name.ends_with(".json"));
    } else {
      same = quiet.outputs.contains(name) && quiet.outputs.at(name) == hash;
    }
    ctx.out << (same ? "identical  " : "DIFFERENT  ") << name << '\n';
    identical = identical && same;
  }
  ctx.out << (identical ? "replay: identical" : "replay: MISMATCH") << '\n';
  return identical ? kExitOk : kExitValidation;
}

int run_command(Context& ctx, const std::string& command) {
  if (command == "estimate") return cmd_estimate(ctx);
  if (command == "sweep-m") return cmd_sweep(ctx, SweepAxis::m);
  if (command == "sweep-sigma") return cmd_sweep(ctx, SweepAxis::sigma);
  if (command == "validate") return cmd_validate(ctx);
  if (command == "pack") return cmd_pack(ctx);
  if (command == "fooling") return cmd_fooling(ctx);
  if (command == "besov-estimate") return cmd_besov(ctx);
  if (command == "replay") return cmd_replay(ctx);
  throw ConfigError(0, "unknown command '" + command + "'");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Noise-level-aware piecewise-polynomial regression on [0,1]^d", "besovreg"};
  app.require_subcommand(1);
  Options options;
  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("--config", options.config_path, "Experiment configuration file");
  app.add_option("--out", options.out_dir, "Output directory");
  auto* seed_opt = app.add_option("--seed", seed, "Base seed (overrides [sweep] seed)");
  app.add_option("--threads", threads, "Worker threads (default: BESOVREG_THREADS or all cores)")
      ->check(CLI::PositiveNumber);
  app.add_option("--format", options.format, "Sweep result format")
      ->check(CLI::IsMember({"csv", "json"}));

  std::vector<CLI::App*> subs;
  auto* estimate_cmd = app.add_subcommand("estimate", "Run the estimator once");
  estimate_cmd->add_option("--observations", options.observations,
                           "JSON file {n, d, sigma, values} instead of a synthetic target");
  subs.push_back(estimate_cmd);
  subs.push_back(app.add_subcommand("sweep-m", "Risk curve over grid levels n_list"));
  subs.push_back(app.add_subcommand("sweep-sigma", "Risk curve over sigma_list at fixed n"));
  auto* validate_cmd = app.add_subcommand("validate", "Run a validation suite");
  validate_cmd->add_option("suite", options.suite, "thresh | tails | lemmas | packing | fooling")
      ->required()
      ->check(CLI::IsMember({"thresh", "tails", "lemmas", "packing", "fooling"}));
  subs.push_back(validate_cmd);
  subs.push_back(app.add_subcommand("pack", "Build a packing family fixture"));
  subs.push_back(app.add_subcommand("fooling", "Build a fooling pair fixture"));
  subs.push_back(app.add_subcommand("besov-estimate", "Piecewise-polynomial seminorm estimate"));
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a recorded output directory and compare");
  replay_cmd->add_option("directory", options.replay_dir, "Directory holding manifest.json")->required();
  subs.push_back(replay_cmd);
  for (auto* sub : subs) sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  options.threads = threads > 0 ? static_cast<unsigned>(threads) : default_thread_count();
  const std::string command = app.get_subcommands().front()->get_name();

  Context ctx{options, ExperimentConfig{}, ConfigCheck{}, false, out, err, json::array(), json::object()};
  try {
    if (!options.config_path.empty()) {
      ctx.config = load_config(options.config_path);
      ctx.has_config = true;
      ctx.check = check_config(ctx.config);
      print_warnings(ctx);
    }
    if (*seed_opt) ctx.config.sweep.seed = seed;
    if (ctx.options.out_dir.empty() && command != "validate" && command != "replay") {
      ctx.options.out_dir = ctx.has_config ? ctx.config.output.directory : "out";
    }
    return run_command(ctx, command);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const BudgetError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const CapacityError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace besovreg::cli
