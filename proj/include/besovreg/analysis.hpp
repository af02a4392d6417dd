#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "besovreg/grid.hpp"
#include "besovreg/multiscale.hpp"
#include "besovreg/shrinkage.hpp"

namespace besovreg {

// Composite quadrature on [0,1]^d: 2^level equal cells per axis.
//  * finite q: `nodes` Gauss-Legendre nodes per cell and axis;
//  * q = inf: maximum over the closed uniform grid with 2^level + 1 points per axis.
struct QuadratureSpec {
  int level = 8;
  int nodes = 4;

  // level n + 2 (finite q) or n + 3 (q = inf), r + 2 nodes.
  static QuadratureSpec for_grid(int n, int r, double q);
};

// ||f - g||_{L_q([0,1]^d)}, q >= 1.
double lq_distance(const PointFunction& f, const PointFunction& g, int d, double q,
                   const QuadratureSpec& spec);
double lq_distance(const FunctionOracle& f, const PiecewisePoly& g, double q,
                   const QuadratureSpec& spec);
double lq_norm(const PointFunction& f, int d, double q, const QuadratureSpec& spec);

// True when x + j h lies in [0,1]^d for j = 0..r.
bool segment_inside(std::span<const double> x, std::span<const double> h, int r) noexcept;

// (-1)^r sum_k (-1)^k binom(r, k) f(x + k h). Throws DomainError when the
// segment [x, x + r h] leaves the unit cube.
double r_th_difference(const PointFunction& f, std::span<const double> x,
                       std::span<const double> h, int r);

struct ModulusBudget {
  int lengths = 16;     // |h| in {t j / lengths : j = 1..lengths}
  int directions = 16;  // angular samples (d = 2); d = 1 uses +-; d >= 3 uses axes and diagonals
  int level = 7;        // x-quadrature resolution on Omega_{rh}
  int nodes = 4;
};

// Lower estimate of omega_r(f, t)_p: sup over sampled shifts |h| <= t of
// ||Delta_h^r f||_{L_p(Omega_{rh})}.
double modulus(const PointFunction& f, int d, int r, double t, double p,
               const ModulusBudget& budget = {}, double p_floor = 0.1);

// Per-cube best-fit settings used by dist(f, S_k(r))_p.
struct BestFitSpec {
  int subcells = 4;          // Gauss subcells per axis (finite p)
  int order = 8;             // Gauss nodes per subcell and axis (finite p)
  int sup_points = 257;      // closed grid points per axis (p = inf)
  double tolerance = 1e-8;   // IRLS relative change (finite p != 2)
  double sup_gap = 1e-4;     // Lawson relative upper/lower gap (p = inf)
  int max_iterations = 4000;

  static BestFitSpec for_dim(int d);
};

// dist(f, S_k(r))_{L_p}: per-cube least squares (p = 2), iteratively
// reweighted least squares (other finite p) or Lawson's discrete minimax
// iteration (p = inf) in the cube's local Legendre basis.
double distance_to_level(const PointFunction& f, int d, int k, int r, double p,
                         const BestFitSpec& spec);

struct BesovEstimate {
  double value = 0.0;               // max_k 2^(ks) dist_k
  int argmax_level = 0;
  std::vector<double> distances;    // dist_k for k = 1..k_max at index k-1
};

// max_{1 <= k <= k_max} 2^(ks) dist(f, S_k(r))_p. Level 0 is left out so that
// the estimate is a seminorm (it vanishes on functions that are polynomial on
// every cube of D_1). Requires r > s and k_max >= 2.
BesovEstimate besov_seminorm_pwp(const PointFunction& f, int d, double s, double p, int r,
                                 int k_max, const BestFitSpec& spec);
BesovEstimate besov_seminorm_pwp(const PointFunction& f, int d, double s, double p, int r,
                                 int k_max);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<std::pair<double, double>> log_pairs;
};

// Ordinary least squares on (log x, log y). Requires >= 3 pairs, all positive.
RateFit rate_fit(std::span<const std::pair<double, double>> pairs);

enum class SweepAxis { m, sigma };

struct RiskSweep {
  SweepAxis axis = SweepAxis::m;
  std::vector<int> n_list;          // axis m
  std::vector<double> sigma_list;   // axis sigma
  int fixed_n = 8;                  // axis sigma
  double fixed_sigma = 0.0;         // axis m
  int trials = 1;
  std::uint64_t seed = 0;
  NoiseKind noise = NoiseKind::gaussian;
  unsigned threads = 1;
  // Quadrature level offset above the grid level n (finite q) and nodes.
  int quadrature_offset = 2;
  int quadrature_nodes = 0;  // 0: r + 2
};

struct RiskTrial {
  std::uint64_t seed = 0;
  double lq_error = 0.0;
  double runtime_ms = 0.0;
  bool step0_zero = false;
};

struct RiskPoint {
  int n = 0;
  double m = 0.0;
  double sigma = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<RiskTrial> trials;
};

// Seed of trial t at setting index i: rng::derive_seed(base, i, t).
std::uint64_t trial_seed(std::uint64_t base, std::size_t setting, std::size_t trial);

// Mean and standard deviation of ||f - estimate(observe(f))||_{L_q} over
// independent trials for each setting of the sweep. The error exponent is
// config.q; config.sigma is overwritten per setting.
std::vector<RiskPoint> risk_curve(const EstimatorConfig& config, const FunctionOracle& oracle,
                                  const RiskSweep& sweep);

}  // namespace besovreg
