#include "besovreg/cli/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "besovreg/error.hpp"

namespace besovreg::cli {

ConfigError::ConfigError(int line, const std::string& message)
    : std::runtime_error(line > 0 ? "config line " + std::to_string(line) + ": " + message
                                  : "config: " + message),
      line_(line) {}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

struct Entry {
  std::string value;
  int line = 0;
};

double to_double(const Entry& e, const std::string& key) {
  const std::string v = trim(e.value);
  if (v == "inf" || v == "infinity") return kInfinity;
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(e.line, "'" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

template <typename Int>
Int to_integer(const Entry& e, const std::string& key) {
  const std::string v = trim(e.value);
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(e.line, "'" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

std::vector<Entry> split_list(const Entry& e) {
  std::vector<Entry> items;
  std::stringstream stream(e.value);
  std::string item;
  while (std::getline(stream, item, ',')) items.push_back({trim(item), e.line});
  if (items.empty()) throw ConfigError(e.line, "empty list");
  return items;
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"problem", {"d", "s", "p", "q", "tau", "r"}},
      {"estimator", {"beta", "kappa", "sigma", "norm_scale"}},
      {"sweep", {"n_list", "sigma_list", "n", "trials", "seed", "noise"}},
      {"target", {}},  // name plus free numeric parameters
      {"fixture", {"n_cells", "gamma", "k_max", "budget"}},
      {"output", {"directory", "experiment_id"}},
  };
  return keys;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  std::map<std::string, std::map<std::string, Entry>> sections;
  std::map<std::string, int> section_lines;
  std::string current;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto comment = raw.find_first_of("#;");
    const std::string line = trim(comment == std::string::npos ? raw : raw.substr(0, comment));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(line_no, "malformed section header");
      current = trim(line.substr(1, line.size() - 2));
      if (!known_keys().contains(current)) {
        throw ConfigError(line_no, "unknown section [" + current + "]");
      }
      if (section_lines.contains(current)) {
        throw ConfigError(line_no, "duplicate section [" + current + "]");
      }
      section_lines[current] = line_no;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line_no, "expected 'key = value'");
    if (current.empty()) throw ConfigError(line_no, "key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(line_no, "empty key");
    const auto& allowed = known_keys().at(current);
    if (current != "target" && !allowed.contains(key)) {
      throw ConfigError(line_no, "unknown key '" + key + "' in [" + current + "]");
    }
    if (sections[current].contains(key)) {
      throw ConfigError(line_no, "duplicate key '" + key + "'");
    }
    sections[current][key] = {value, line_no};
  }

  ExperimentConfig config;
  config.source = text;
  auto find = [&](const std::string& section, const std::string& key) -> const Entry* {
    const auto s = sections.find(section);
    if (s == sections.end()) return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  };

  EstimatorConfig& est = config.estimator;
  if (auto e = find("problem", "d")) est.d = to_integer<int>(*e, "d");
  if (auto e = find("problem", "s")) est.s = to_double(*e, "s");
  if (auto e = find("problem", "p")) est.p = to_double(*e, "p");
  if (auto e = find("problem", "q")) est.q = to_double(*e, "q");
  if (auto e = find("problem", "tau")) est.tau = to_double(*e, "tau");
  if (auto e = find("problem", "r")) est.r = to_integer<int>(*e, "r");
  if (auto e = find("estimator", "beta")) est.beta = to_double(*e, "beta");
  if (auto e = find("estimator", "kappa")) est.kappa = to_double(*e, "kappa");
  if (auto e = find("estimator", "sigma")) est.sigma = to_double(*e, "sigma");
  if (auto e = find("estimator", "norm_scale")) est.norm_scale = to_double(*e, "norm_scale");
  if (est.d < 1) throw ConfigError(find("problem", "d")->line, "'d' must be >= 1");

  SweepSection& sweep = config.sweep;
  if (auto e = find("sweep", "n_list")) {
    for (const auto& item : split_list(*e)) sweep.n_list.push_back(to_integer<int>(item, "n_list"));
  }
  if (auto e = find("sweep", "sigma_list")) {
    for (const auto& item : split_list(*e)) sweep.sigma_list.push_back(to_double(item, "sigma_list"));
  }
  if (auto e = find("sweep", "n")) sweep.n = to_integer<int>(*e, "n");
  if (auto e = find("sweep", "trials")) {
    sweep.trials = to_integer<int>(*e, "trials");
    if (sweep.trials < 1) throw ConfigError(e->line, "'trials' must be >= 1");
  }
  if (auto e = find("sweep", "seed")) sweep.seed = to_integer<std::uint64_t>(*e, "seed");
  if (auto e = find("sweep", "noise")) {
    try {
      sweep.noise = parse_noise_kind(trim(e->value));
    } catch (const Error& err) {
      throw ConfigError(e->line, err.what());
    }
  }
  for (int n : sweep.n_list) {
    if (n < 1) throw ConfigError(find("sweep", "n_list")->line, "grid levels must be >= 1");
  }
  for (double sigma : sweep.sigma_list) {
    if (!(sigma >= 0.0)) throw ConfigError(find("sweep", "sigma_list")->line, "sigma must be >= 0");
  }

  if (sections.contains("target")) {
    config.target_given = true;
    for (const auto& [key, entry] : sections.at("target")) {
      if (key == "name") {
        config.target.name = trim(entry.value);
      } else {
        config.target.params[key] = to_double(entry, key);
      }
    }
    try {
      (void)make_target(config.target, est.d);
    } catch (const Error& err) {
      throw ConfigError(section_lines.at("target"), err.what());
    }
  }

  FixtureSection& fixture = config.fixture;
  if (auto e = find("fixture", "n_cells")) fixture.n_cells = to_integer<int>(*e, "n_cells");
  if (auto e = find("fixture", "gamma")) fixture.gamma = to_double(*e, "gamma");
  if (auto e = find("fixture", "k_max")) fixture.k_max = to_integer<int>(*e, "k_max");
  if (auto e = find("fixture", "budget")) fixture.budget = to_integer<std::size_t>(*e, "budget");

  if (auto e = find("output", "directory")) config.output.directory = trim(e->value);
  if (auto e = find("output", "experiment_id")) config.output.experiment_id = trim(e->value);

  // Remember where [problem] starts for validation messages.
  config.problem_line = section_lines.contains("problem") ? section_lines.at("problem") : 0;
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot read '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

ConfigCheck check_config(const ExperimentConfig& config) {
  try {
    return validate(config.estimator);
  } catch (const PreconditionError& err) {
    throw ConfigError(config.problem_line, err.what());
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  const EstimatorConfig& e = estimator;
  auto number = [](double v) -> nlohmann::json {
    if (std::isinf(v)) return "inf";
    return v;
  };
  j["problem"] = {{"d", e.d}, {"s", e.s}, {"p", number(e.p)}, {"q", number(e.q)}, {"r", e.order()}};
  if (e.tau) j["problem"]["tau"] = number(*e.tau);
  j["estimator"] = {{"beta", e.beta ? *e.beta : default_beta(e)}, {"kappa", e.kappa}, {"sigma", e.sigma},
                    {"norm_scale", e.norm_scale}};
  j["sweep"] = {{"n_list", sweep.n_list}, {"sigma_list", sweep.sigma_list}, {"n", sweep.n},
                {"trials", sweep.trials}, {"seed", sweep.seed}, {"noise", to_string(sweep.noise)}};
  j["target"] = {{"name", target.name}, {"params", target.params}};
  j["fixture"] = {{"n_cells", fixture.n_cells}, {"budget", fixture.budget}};
  if (fixture.gamma) j["fixture"]["gamma"] = *fixture.gamma;
  if (fixture.k_max) j["fixture"]["k_max"] = *fixture.k_max;
  j["output"] = {{"directory", output.directory}, {"experiment_id", output.experiment_id}};
  return j;
}

}  // namespace besovreg::cli
