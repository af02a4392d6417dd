#include "besovreg/shrinkage.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "besovreg/error.hpp"

namespace besovreg {

int EstimatorConfig::order() const {
  if (r) return *r;
  return static_cast<int>(std::floor(s)) + 1;
}

BetaInterval beta_interval(const EstimatorConfig& config) {
  const double pe = config.p_eff();
  const double lower = config.d / 2.0;
  const double upper = config.q > pe ? config.s * pe / (config.q - pe)
                                     : std::numeric_limits<double>::infinity();
  return {lower, upper};
}

double default_beta(const EstimatorConfig& config) {
  const BetaInterval interval = beta_interval(config);
  const double fallback = config.d / 2.0 + config.s;
  if (interval.empty()) return fallback;
  if (std::isinf(interval.upper)) return fallback;
  return std::min(fallback, 0.5 * (interval.lower + interval.upper));
}

ConfigCheck validate(const EstimatorConfig& config) {
  auto fail = [](const std::string& message) { throw PreconditionError(message); };
  if (config.d < 1) fail("dimension d must be >= 1");
  if (!(config.s > 0.0)) fail("smoothness s must be > 0");
  if (!(config.p > 0.0)) fail("integrability p must be > 0");
  if (!(config.q >= 1.0) || std::isinf(config.q)) fail("error exponent q must lie in [1, inf)");
  if (!(config.s > config.d / config.p)) {
    std::ostringstream msg;
    msg << "violated compact embedding s > d/p (s=" << config.s << ", d/p=" << config.d / config.p
        << ")";
    fail(msg.str());
  }
  if (!(config.kappa > 0.0)) fail("threshold multiplier kappa must be > 0");
  if (!(config.sigma >= 0.0)) fail("noise level sigma must be >= 0");
  if (!(config.norm_scale > 0.0)) fail("norm scale M must be > 0");
  if (config.r && *config.r < 1) fail("polynomial order r must be >= 1");

  ConfigCheck check;
  const double bound = config.p + 2.0 * config.s * config.p / config.d;
  check.primary_regime = config.q < bound;
  if (!check.primary_regime) {
    std::ostringstream msg;
    msg << "outside primary regime q < p + 2sp/d (q=" << config.q << ", bound=" << bound
        << "); rate guarantees do not apply";
    check.warnings.push_back(msg.str());
  }
  if (config.r && !(*config.r > config.s)) {
    check.warnings.push_back("polynomial order r <= s; approximation rate limited by r");
  }
  if (config.beta) {
    const BetaInterval interval = beta_interval(config);
    if (!interval.contains(*config.beta)) {
      std::ostringstream msg;
      msg << "invalid beta " << *config.beta << ": must lie in (" << interval.lower << ", "
          << interval.upper << ")";
      fail(msg.str());
    }
  }
  return check;
}

double epsilon(double sigma, double m, double s, int d) {
  if (!(m >= 1.0) || !(sigma >= 0.0)) throw PreconditionError("epsilon: requires m >= 1, sigma >= 0");
  if (sigma == 0.0) return 0.0;
  return std::pow(sigma * sigma / m, s / (2.0 * s + d));
}

std::optional<int> k_star(double eps, double s) {
  if (!(eps >= 0.0) || eps >= 1.0) {
    throw DomainError("k_star: epsilon must lie in [0, 1); apply the Step-0 guard first");
  }
  if (eps == 0.0) return std::nullopt;
  const double x = std::pow(eps, -1.0 / s);
  if (std::isinf(x) || x > 0x1.0p1000) return std::nullopt;
  int k = static_cast<int>(std::floor(std::log2(x))) + 1;
  while (k > 1 && std::ldexp(1.0, k - 1) > x) --k;
  while (x >= std::ldexp(1.0, k)) ++k;
  return k;
}

ThresholdSchedule schedule(const EstimatorConfig& config, int n) {
  const int r = config.order();
  if (n < r + 1) throw PreconditionError("schedule: requires n >= r + 1");
  const double m = std::ldexp(1.0, n * config.d);
  const double scaled_sigma = config.sigma / config.norm_scale;
  if (scaled_sigma * scaled_sigma >= m) {
    throw PreconditionError("schedule: sigma^2 >= m M^2; the estimator returns zero (Step 0)");
  }
  ThresholdSchedule sched;
  sched.beta = config.beta.value_or(default_beta(config));
  if (config.beta && !beta_interval(config).contains(*config.beta)) {
    throw PreconditionError("schedule: invalid beta outside the admissible interval");
  }
  sched.epsilon = epsilon(scaled_sigma, m, config.s, config.d);
  sched.k_star = k_star(sched.epsilon, config.s);
  const int levels = n - r + 1;
  sched.lambdas.assign(static_cast<std::size_t>(levels), 0.0);
  if (sched.k_star) {
    const int ks = *sched.k_star;
    for (int k = ks + 1; k < levels; ++k) {
      sched.lambdas[static_cast<std::size_t>(k)] =
          config.norm_scale * config.kappa * std::exp2(-ks * config.s + sched.beta * (k - ks));
    }
  }
  return sched;
}

ThresholdedLevel threshold_level(const CoefficientVector& nu_star, double lambda) {
  if (!(lambda >= 0.0)) throw PreconditionError("threshold_level: lambda must be >= 0");
  ThresholdedLevel out{nu_star, 0.0};
  std::size_t zeroed = 0;
  for (auto& v : out.nu.entries) {
    const double t = hard_threshold(v, lambda);
    if (t == 0.0 && v != 0.0) ++zeroed;
    v = t;
  }
  out.zeroed_fraction =
      out.nu.entries.empty() ? 0.0 : static_cast<double>(zeroed) / out.nu.entries.size();
  return out;
}

double weighted_norm(std::span<const double> v, double q) {
  if (v.empty()) return 0.0;
  if (std::isinf(q)) {
    double best = 0.0;
    for (double x : v) best = std::max(best, std::abs(x));
    return best;
  }
  double sum = 0.0;
  for (double x : v) sum += std::pow(std::abs(x), q);
  return std::pow(sum / static_cast<double>(v.size()), 1.0 / q);
}

double deterministic_sum(const ThresholdSchedule& sched, const EstimatorConfig& config) {
  const double pe = config.p_eff();
  double total = 0.0;
  for (std::size_t k = 0; k < sched.lambdas.size(); ++k) {
    const double lambda = sched.lambdas[k];
    if (lambda <= 0.0) continue;
    total += std::exp2(-static_cast<double>(k) * config.s * pe / config.q) *
             std::pow(lambda, 1.0 - pe / config.q);
  }
  return total;
}

EstimateResult estimate_detailed(const ObservationSet& obs, const EstimatorConfig& config,
                                 unsigned threads) {
  ConfigCheck check = validate(config);
  if (obs.grid.dim() != config.d) {
    throw PreconditionError("estimate: observation dimension does not match config.d");
  }
  const int n = obs.grid.level();
  const int r = config.order();
  if (n < r + 1) {
    throw PreconditionError("estimate: requires n >= r + 1 (n=" + std::to_string(n) +
                            ", r=" + std::to_string(r) + ")");
  }
  EstimateResult result;
  result.warnings = std::move(check.warnings);
  const double m = static_cast<double>(obs.grid.size());
  const double scaled_sigma = config.sigma / config.norm_scale;
  if (scaled_sigma * scaled_sigma >= m) {
    result.step0_zero = true;
    result.estimate = zero_piecewise(n - r, config.d, r, 1 << r);
    result.schedule.epsilon = 1.0;
    return result;
  }
  result.schedule = schedule(config, n);
  MultiscaleDecomposition decomposition = decompose(obs, r, threads);
  for (int k = 0; k <= decomposition.max_level(); ++k) {
    auto& level = decomposition.levels[static_cast<std::size_t>(k)];
    ThresholdedLevel t = threshold_level(level, result.schedule.lambdas[static_cast<std::size_t>(k)]);
    result.zeroed_fraction.push_back(t.zeroed_fraction);
    level = std::move(t.nu);
  }
  result.estimate = reconstruct(decomposition, decomposition.max_level());
  return result;
}

PiecewisePoly estimate(const ObservationSet& obs, const EstimatorConfig& config, unsigned threads) {
  return estimate_detailed(obs, config, threads).estimate;
}

}  // namespace besovreg
