#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "besovreg/grid.hpp"

namespace besovreg {

// ---------------------------------------------------------------------------
// Bumps and targets

// exp(1 - 1/(1 - (2t - 1)^2)) on (0, 1), exactly 0 elsewhere; 1 at t = 1/2.
double mollifier_1d(double t) noexcept;
// Product of mollifier_1d over the axes.
double mollifier(std::span<const double> x) noexcept;
// ||mollifier||_{L_q([0,1]^d)}, q in [1, inf].
double mollifier_lq_norm(int d, double q);

// amplitude * mollifier(n (x - corner)), supported on the cell
// prod_j [corner_j, corner_j + 1/n].
struct BumpFunction {
  std::vector<double> corner;
  int cells_per_axis = 1;
  double amplitude = 1.0;

  double operator()(std::span<const double> x) const noexcept;
  double sup_norm() const noexcept { return amplitude < 0 ? -amplitude : amplitude; }
};

// Named target with numeric parameters. Recognised names and parameters
// (defaults in brackets):
//   zero
//   poly       r [3], seed [1], scale [1]           random polynomial of degree < r
//   piecewise  k [2], r [3], seed [1], scale [1]    random element of S_k(r)
//   bump       center [0.5], width [0.5], amplitude [1]
//   cusp       center [1/3], gamma [1.5], width [3], amplitude [1]
//              amplitude |x - center|^gamma mollifier((x - center)/width + 1/2)
//   kink       center [1/3], amplitude [1]          amplitude |x_0 - center|
// Unknown names or parameters raise PreconditionError.
struct TargetSpec {
  std::string name = "zero";
  std::map<std::string, double> params;
};

FunctionOracle make_target(const TargetSpec& spec, int d);
std::vector<std::string> target_names();

// ---------------------------------------------------------------------------
// Lower-bound fixtures

struct PackingSigns {
  int length = 0;                          // P
  std::vector<std::vector<int>> vectors;   // entries +-1
  int min_distance = 0;                    // certified by a full pairwise scan
  std::size_t draws = 0;
};

// Greedy Gilbert-Varshamov: draw random sign vectors, keep those at Hamming
// distance >= target from every kept vector, until `budget` draws are used
// or `max_members` vectors are kept. Throws BudgetError when fewer than two
// vectors survive (or P < 4, where the target cannot be met).
PackingSigns packing_signs(int P, int target_distance, std::uint64_t seed,
                           std::size_t budget = 100000, std::size_t max_members = 4096);

// Minimum pairwise Hamming distance by exhaustive scan.
int min_hamming_distance(const std::vector<std::vector<int>>& vectors);

struct PackingFamily {
  int n_cells = 1;  // cells per axis
  int d = 1;
  double s = 1.0;
  double p = 2.0;
  double q = 2.0;
  double gamma = 1.0;
  double amplitude = 0.0;  // gamma n^(-s)
  PackingSigns signs;
  // min over pairs of ||f_i - f_j||_{L_q}: closed form over the flipped cells,
  // and quadrature on the closest pairs.
  double min_separation = 0.0;
  double min_separation_measured = 0.0;
  double c0 = 0.0;  // min_separation / (gamma n^(-s))
  double max_seminorm = 0.0;
  std::size_t seminorm_members = 0;  // members entering max_seminorm

  std::size_t size() const noexcept { return signs.vectors.size(); }
  int cell_count() const noexcept;
  FunctionOracle member(std::size_t i) const;
};

struct PackingOptions {
  std::uint64_t seed = 1;
  std::size_t budget = 100000;
  std::size_t max_members = 4096;
  // members whose seminorm is estimated (the first ones); default all
  std::size_t seminorm_members = std::numeric_limits<std::size_t>::max();
  int extra_levels = 3;               // k_max = ceil(log2 n_cells) + extra_levels
};

// P = n_cells^d bumps sum_i kappa_i phi_i with signs from
// packing_signs(P, ceil(P / 4)).
PackingFamily build_packing_family(int n_cells, double s, double gamma, int d, double q,
                                   double p = 2.0, const PackingOptions& options = {});

// Rescales gamma so that the largest member seminorm estimate equals 1/2
// (the estimate is homogeneous in gamma) and rebuilds the family.
PackingFamily calibrate_packing_family(int n_cells, double s, int d, double q, double p = 2.0,
                                       const PackingOptions& options = {});

struct FoolingPair {
  FunctionOracle f;
  FunctionOracle g;
  int n = 0;
  int d = 1;
  double s = 1.0;
  double p = 2.0;
  double q = 2.0;
  double gamma = 1.0;
  double amplitude = 0.0;
  bool full_cover = true;      // bumps in every grid cell (p >= q) or a single cell
  double separation = 0.0;     // ||f - g||_{L_q} = 2 ||g0||_{L_q}
  double rate = 0.0;           // m^(-s/d + (1/p - 1/q)_+)
  double constant = 0.0;       // separation / rate
  double seminorm = 0.0;       // estimate of g0 at s after calibration
  double max_abs_grid_value = 0.0;
};

// f = +g0, g = -g0 with g0 a sum of bumps supported in grid cells, vanishing
// at every grid point. gamma is calibrated so that the seminorm estimate of
// g0 is 1/2. With calibrate = false, gamma = 1 is used.
FoolingPair fooling_pair(const SampleGrid& grid, double s, double p, double q, int d,
                         bool calibrate = true);

nlohmann::json manifest(const PackingFamily& family);
nlohmann::json manifest(const FoolingPair& pair);

// ---------------------------------------------------------------------------
// Thresholding checks

// |thresh_lambda(x + e) - x| <= 3 (min(|x|, lambda) + |thresh_{lambda/2}(e)|).
bool check_pointwise_thresh(double x, double e, double lambda) noexcept;

struct DeterministicBound {
  double error = 0.0;       // ||v - thresh_lambda(v + xi)||*_q
  double middle = 0.0;      // 3 (||min(|v|, lambda)||*_q + ||xi_lambda||*_q)
  double bound = 0.0;       // 3 ((||v||*_p)^(p/q) lambda^(1-p/q) + ||xi_lambda||*_q)
  bool ok = false;
};

// Both inequalities error <= middle <= bound, with relative slack 1e-12.
DeterministicBound check_deterministic_bound(std::span<const double> v,
                                             std::span<const double> xi, double lambda,
                                             double p, double q);

struct SuiteCount {
  std::size_t instances = 0;
  std::size_t violations = 0;
  bool passed() const noexcept { return violations == 0; }
};

SuiteCount pointwise_suite(std::size_t triples, std::uint64_t seed);
// Random (v, xi, lambda, q in [1, 4], p in [0.5, q]) instances.
SuiteCount deterministic_suite(std::size_t instances, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Gaussian tails

struct TailRow {
  double T = 0.0;
  double frequency = 0.0;
  std::size_t exceedances = 0;
};

// Empirical P(||xi_lambda||*_q >= T): xi in R^L i.i.d. N(0, sigma_tilde^2),
// thresholded at lambda / 2. Trial t draws from rng::derive_seed(seed, t).
std::vector<TailRow> mc_tail(double lambda, double sigma_tilde, std::size_t L, double q,
                             std::span<const double> T_grid, std::size_t trials,
                             std::uint64_t seed, unsigned threads = 1);

// Sample of ||xi_lambda||*_q for each lambda, sharing the Gaussian draws:
// result[i][t] belongs to lambdas[i] and trial t.
std::vector<std::vector<double>> mc_tail_norms(std::span<const double> lambdas,
                                               double sigma_tilde, std::size_t L, double q,
                                               std::size_t trials, std::uint64_t seed,
                                               unsigned threads = 1);

// C T^(-q) sigma^q exp(-b^2 / (4 sigma^2)), b = max(lambda/2, 2^(-1/q) T).
double tail_envelope(double T, double lambda, double sigma_tilde, double q, double C_env);

struct TailSlope {
  double lambda = 0.0;
  double slope = 0.0;       // d log(frequency) / d (b / sigma)^2
  std::size_t points = 0;   // T values with frequency in [lo, hi]
  // b = lambda/2 on the whole fitted range, so (b/sigma)^2 is constant there;
  // the fit then uses the T branch (2^(-1/q) T / sigma)^2 instead.
  bool t_branch = false;
  std::vector<TailRow> rows;
};

// Fits log frequency against (b/sigma)^2 on T values whose empirical
// frequencies lie in [freq_lo, freq_hi].
TailSlope tail_slope(double lambda, std::span<const double> norms, double sigma_tilde, double q,
                     double freq_lo = 1e-4, double freq_hi = 1e-1, int grid_points = 25);

// ---------------------------------------------------------------------------
// Gaussian shift (halfspace of standard mass alpha_bar)

enum class ShiftOrientation { toward_shift, against_shift };

struct ShiftMass {
  double mass = 0.0;
  bool bound_ok = false;
};

// mu_{y,sigma}(B) for a halfspace B with mu_{0,sigma}(B) = alpha_bar.
// toward_shift takes the halfspace that y moves into (largest shifted mass),
// against_shift the opposite one. Requires 0 < alpha_bar < 1/5,
// y_norm^2 < -sigma^2 ln(5 alpha_bar), m_dim >= 1.
ShiftMass gaussian_shift_mass(double y_norm, double sigma, double alpha_bar, int m_dim,
                              ShiftOrientation orientation = ShiftOrientation::toward_shift);

// Admissible grid of (alpha_bar, y_norm) pairs; counts bound failures.
SuiteCount gaussian_shift_sweep(int alpha_points = 40, int y_points = 40, double sigma = 1.0);

// ---------------------------------------------------------------------------
// Integral and series lemmas

// I(a, q) e^(a^2/4) = int_0^inf (a + t)^q exp(-a t - t^2/2 - a^2/4) dt
// by double-exponential quadrature. Throws QuadratureError on failure.
double scaled_gaussian_moment_tail(double a, double q);
double gaussian_moment_tail(double a, double q);  // I(a, q)

// sum_{k >= 0} 2^(a k) exp(-c (2^(b k) - 1) tau), the ratio against e^(-c tau).
double series_ratio(double a, double b, double c, double tau);

struct LemmaReport {
  struct MomentRow {
    double q = 0.0;
    double sup_scaled = 0.0;  // max_a I(a, q) e^(a^2/4) on the a grid
    bool bounded = false;
    bool monotone_tail = false;  // nonincreasing for a >= 2 sqrt(q)
  };
  struct SeriesRow {
    double a = 0.0, b = 0.0, c = 0.0;
    double C = 0.0;  // sup over the tau grid
    bool finite = false;
    bool stable = false;  // sup on a refined tau grid agrees to 1e-9
  };
  std::vector<MomentRow> moments;
  std::vector<SeriesRow> series;
  bool passed() const noexcept;
};

struct SeriesParams {
  double a = 0.0, b = 1.0, c = 1.0;
};

// a in {0, 1/2, 1, 2}, b in {1/2, 1, 2}, c in {1/2, 1, 2}.
std::vector<SeriesParams> default_series_grid();

// Integral lemma on q_list x a_grid; series lemma on abc x tau_grid.
LemmaReport quadrature_lemma_checks(std::span<const double> q_list,
                                    std::span<const double> a_grid,
                                    std::span<const double> tau_grid,
                                    const std::vector<SeriesParams>& abc = default_series_grid());

nlohmann::json to_json(const LemmaReport& report);

}  // namespace besovreg
