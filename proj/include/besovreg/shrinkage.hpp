#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "besovreg/grid.hpp"
#include "besovreg/multiscale.hpp"

namespace besovreg {

struct EstimatorConfig {
  double s = 1.0;  // smoothness
  double p = 2.0;  // integrability of the model class
  double q = 2.0;  // error norm exponent, in [1, inf)
  int d = 1;
  std::optional<int> r;        // polynomial order; default floor(s) + 1
  std::optional<double> beta;  // threshold growth exponent; default see default_beta
  double kappa = 1.0;          // threshold multiplier
  double sigma = 0.0;          // known noise level
  double norm_scale = 1.0;     // Besov-ball radius M
  std::optional<double> tau;   // accepted for bookkeeping, not used

  int order() const;
  // min(p, q); the p > q case reduces to p = q.
  double p_eff() const noexcept { return p < q ? p : q; }
};

// Open interval (d/2, s p_eff / (q - p_eff)); upper is +inf when p >= q.
struct BetaInterval {
  double lower;
  double upper;
  bool empty() const noexcept { return !(upper > lower); }
  bool contains(double beta) const noexcept { return beta > lower && beta < upper; }
};

BetaInterval beta_interval(const EstimatorConfig& config);

// min(d/2 + s, midpoint of the admissible interval). When the interval is
// empty (outside the primary regime) falls back to d/2 + s.
double default_beta(const EstimatorConfig& config);

struct ConfigCheck {
  bool primary_regime = true;
  std::vector<std::string> warnings;
};

// Throws PreconditionError naming the violated condition: "compact embedding
// s > d/p", q outside [1, inf), kappa <= 0, sigma < 0, M <= 0, or an explicit
// beta outside its admissible interval. Leaving the primary regime
// "q < p + 2sp/d" only produces a warning.
ConfigCheck validate(const EstimatorConfig& config);

// (sigma^2 / m)^(s / (2s + d)).
double epsilon(double sigma, double m, double s, int d);

// The integer k with 2^(k-1) <= eps^(-1/s) < 2^k; nullopt ("infinite") for
// eps = 0. Throws DomainError for eps >= 1 or eps < 0.
std::optional<int> k_star(double eps, double s);

struct ThresholdSchedule {
  double epsilon = 0.0;
  std::optional<int> k_star;  // nullopt: no level is thresholded
  double beta = 0.0;
  std::vector<double> lambdas;  // lambda_0 .. lambda_{n-r}
};

// lambda_k = 0 for k <= k*, M kappa 2^(-k* s) 2^(beta (k - k*)) above, with
// eps computed from sigma / M. Requires sigma^2 < m M^2 (Step-0 guard is the
// caller's job) and n >= r + 1.
ThresholdSchedule schedule(const EstimatorConfig& config, int n);

inline double hard_threshold(double x, double lambda) noexcept {
  return (x > lambda || x < -lambda) ? x : 0.0;
}

struct ThresholdedLevel {
  CoefficientVector nu;
  double zeroed_fraction = 0.0;  // share of entries set to zero by the threshold
};

ThresholdedLevel threshold_level(const CoefficientVector& nu_star, double lambda);

// (1/L sum |v_i|^q)^(1/q); max |v_i| for q = inf.
double weighted_norm(std::span<const double> v, double q);

// Sigma_1 = sum_k 2^(-k s p/q) lambda_k^(1 - p/q) over levels with lambda_k > 0,
// with p replaced by p_eff.
double deterministic_sum(const ThresholdSchedule& sched, const EstimatorConfig& config);

struct EstimateResult {
  PiecewisePoly estimate;
  bool step0_zero = false;
  ThresholdSchedule schedule;
  std::vector<double> zeroed_fraction;  // per level
  std::vector<std::string> warnings;
};

// Full estimator A(y): Step 0 guard (sigma^2 >= m M^2 gives the zero
// function), multiscale decomposition, level-wise hard thresholding, and
// reconstruction at level n - r.
EstimateResult estimate_detailed(const ObservationSet& obs, const EstimatorConfig& config,
                                 unsigned threads = 1);
PiecewisePoly estimate(const ObservationSet& obs, const EstimatorConfig& config,
                       unsigned threads = 1);

}  // namespace besovreg
