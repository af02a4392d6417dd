#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "besovreg/grid.hpp"
#include "besovreg/oracles.hpp"
#include "besovreg/shrinkage.hpp"

namespace besovreg::cli {

// Parse or validation failure; `line` is 0 when no single line is at fault.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& message);
  int line() const noexcept { return line_; }

 private:
  int line_;
};

struct SweepSection {
  std::vector<int> n_list;
  std::vector<double> sigma_list;
  int n = 8;  // grid level for estimate, sweep-sigma and fooling
  int trials = 1;
  std::uint64_t seed = 1;
  NoiseKind noise = NoiseKind::gaussian;
};

struct FixtureSection {
  int n_cells = 4;
  std::optional<double> gamma;  // unset: calibrate
  std::optional<int> k_max;     // besov-estimate
  std::size_t budget = 100000;
};

struct OutputSection {
  std::string directory = "out";
  std::string experiment_id = "run";
};

struct ExperimentConfig {
  EstimatorConfig estimator;  // problem + estimator sections
  SweepSection sweep;
  TargetSpec target;
  bool target_given = false;  // a [target] section was present
  FixtureSection fixture;
  OutputSection output;
  std::string source;    // verbatim text the config was parsed from
  int problem_line = 0;  // line of the [problem] header, 0 if absent

  nlohmann::json to_json() const;
};

// Key/value file with [section] headers; '#' and ';' start comments.
//
//   [problem]    d s p q tau r
//   [estimator]  beta kappa sigma norm_scale
//   [sweep]      n_list sigma_list n trials seed noise
//   [target]     name, then numeric target parameters
//   [fixture]    n_cells gamma k_max budget
//   [output]     directory experiment_id
//
// Lists are comma separated. Unknown sections or keys, duplicates and
// malformed values raise ConfigError with the offending line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Estimator validation mapped to ConfigError (line of the [problem] header).
ConfigCheck check_config(const ExperimentConfig& config);

}  // namespace besovreg::cli
