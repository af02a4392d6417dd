#include "besovreg/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <numbers>
#include <numeric>

#include "besovreg/error.hpp"
#include "besovreg/parallel.hpp"
#include "besovreg/quadrature.hpp"
#include "besovreg/rng.hpp"

namespace besovreg {

QuadratureSpec QuadratureSpec::for_grid(int n, int r, double q) {
  if (std::isinf(q)) return {n + 3, r + 2};
  return {n + 2, r + 2};
}

double lq_distance(const PointFunction& f, const PointFunction& g, int d, double q,
                   const QuadratureSpec& spec) {
  return lq_norm([&](std::span<const double> x) { return f(x) - g(x); }, d, q, spec);
}

double lq_distance(const FunctionOracle& f, const PiecewisePoly& g, double q,
                   const QuadratureSpec& spec) {
  return lq_norm([&](std::span<const double> x) { return f(x) - eval_pwp(g, x); }, g.d, q, spec);
}

double lq_norm(const PointFunction& f, int d, double q, const QuadratureSpec& spec) {
  if (!(q >= 1.0)) throw PreconditionError("lq_distance: requires q >= 1");
  const std::vector<double> lo(d, 0.0);
  const std::vector<double> hi(d, 1.0);
  if (std::isinf(q)) {
    double best = 0.0;
    for_each_uniform_point(lo, hi, (1 << spec.level) + 1, [&](std::span<const double> x) {
      best = std::max(best, std::abs(f(x)));
    });
    return best;
  }
  double integral = 0.0;
  for_each_composite_node(lo, hi, 1 << spec.level, spec.nodes,
                          [&](std::span<const double> x, double w) {
                            const double v = std::abs(f(x));
                            integral += w * (q == 2.0 ? v * v : std::pow(v, q));
                          });
  return std::pow(integral, 1.0 / q);
}

bool segment_inside(std::span<const double> x, std::span<const double> h, int r) noexcept {
  constexpr double kSlack = 1e-14;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double end = x[j] + r * h[j];
    if (x[j] < -kSlack || x[j] > 1.0 + kSlack || end < -kSlack || end > 1.0 + kSlack) {
      return false;
    }
  }
  return true;
}

namespace {

double binomial(int r, int k) {
  double value = 1.0;
  for (int i = 1; i <= k; ++i) value = value * (r - k + i) / i;
  return value;
}

double difference_unchecked(const PointFunction& f, std::span<const double> x,
                            std::span<const double> h, int r, std::vector<double>& scratch) {
  double sum = 0.0;
  for (int k = 0; k <= r; ++k) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      scratch[j] = std::clamp(x[j] + k * h[j], 0.0, 1.0);
    }
    const double sign = ((r - k) % 2 == 0) ? 1.0 : -1.0;
    sum += sign * binomial(r, k) * f(scratch);
  }
  return sum;
}

std::vector<std::vector<double>> shift_directions(int d, int count) {
  std::vector<std::vector<double>> dirs;
  if (d == 1) return {{1.0}, {-1.0}};
  if (d == 2) {
    for (int a = 0; a < count; ++a) {
      const double angle = 2.0 * std::numbers::pi * a / count;
      dirs.push_back({std::cos(angle), std::sin(angle)});
    }
    return dirs;
  }
  for (int j = 0; j < d; ++j) {
    for (double sgn : {1.0, -1.0}) {
      std::vector<double> e(d, 0.0);
      e[j] = sgn;
      dirs.push_back(e);
    }
  }
  for (double sgn : {1.0, -1.0}) dirs.emplace_back(d, sgn / std::sqrt(static_cast<double>(d)));
  return dirs;
}

}  // namespace

double r_th_difference(const PointFunction& f, std::span<const double> x,
                       std::span<const double> h, int r) {
  if (r < 1) throw PreconditionError("r_th_difference: r must be >= 1");
  if (!segment_inside(x, h, r)) {
    throw DomainError("r_th_difference: segment [x, x + r h] leaves the unit cube");
  }
  std::vector<double> scratch(x.size());
  return difference_unchecked(f, x, h, r, scratch);
}

double modulus(const PointFunction& f, int d, int r, double t, double p,
               const ModulusBudget& budget, double p_floor) {
  if (!(t > 0.0)) throw PreconditionError("modulus: t must be > 0");
  if (!(p >= p_floor)) throw PreconditionError("modulus: p below floor");
  double best = 0.0;
  std::vector<double> h(d);
  std::vector<double> lo(d);
  std::vector<double> hi(d);
  std::vector<double> scratch(d);
  for (const auto& dir : shift_directions(d, budget.directions)) {
    for (int l = 1; l <= budget.lengths; ++l) {
      const double length = t * l / budget.lengths;
      bool empty = false;
      for (int j = 0; j < d; ++j) {
        h[j] = length * dir[j];
        lo[j] = std::max(0.0, -r * h[j]);
        hi[j] = std::min(1.0, 1.0 - r * h[j]);
        if (!(hi[j] > lo[j])) empty = true;
      }
      if (empty) continue;
      double value = 0.0;
      if (std::isinf(p)) {
        for_each_uniform_point(lo, hi, (1 << budget.level) + 1, [&](std::span<const double> x) {
          value = std::max(value, std::abs(difference_unchecked(f, x, h, r, scratch)));
        });
      } else {
        double integral = 0.0;
        for_each_composite_node(lo, hi, 1 << budget.level, budget.nodes,
                                [&](std::span<const double> x, double w) {
                                  integral += w * std::pow(std::abs(difference_unchecked(
                                                               f, x, h, r, scratch)),
                                                           p);
                                });
        value = std::pow(integral, 1.0 / p);
      }
      best = std::max(best, value);
    }
  }
  return best;
}

BestFitSpec BestFitSpec::for_dim(int d) {
  BestFitSpec spec;
  if (d >= 2) {
    spec.subcells = 2;
    spec.order = 6;
    spec.sup_points = 33;
  }
  return spec;
}

namespace {

// Sample layout on the reference cube shared by all cubes of a level.
struct FitLayout {
  std::vector<double> points;   // local coordinates, npts x d
  std::vector<double> weights;  // sum to 1 (uniform for p = inf)
  Eigen::MatrixXd design;       // npts x rho, reference Legendre values
  std::size_t count = 0;
};

FitLayout make_layout(int d, int r, double p, const BestFitSpec& spec) {
  FitLayout layout;
  const std::vector<double> lo(d, 0.0);
  const std::vector<double> hi(d, 1.0);
  if (std::isinf(p)) {
    for_each_uniform_point(lo, hi, spec.sup_points, [&](std::span<const double> u) {
      layout.points.insert(layout.points.end(), u.begin(), u.end());
      layout.weights.push_back(1.0);
    });
  } else {
    for_each_composite_node(lo, hi, spec.subcells, spec.order,
                            [&](std::span<const double> u, double w) {
                              layout.points.insert(layout.points.end(), u.begin(), u.end());
                              layout.weights.push_back(w);
                            });
  }
  layout.count = layout.weights.size();
  const double total = std::accumulate(layout.weights.begin(), layout.weights.end(), 0.0);
  for (auto& w : layout.weights) w /= total;
  const PolySpace space(r, d);
  layout.design.resize(static_cast<Eigen::Index>(layout.count), static_cast<Eigen::Index>(space.rho()));
  std::vector<double> phi(space.rho());
  for (std::size_t i = 0; i < layout.count; ++i) {
    space.reference_values(std::span(layout.points).subspan(i * d, d), phi);
    for (std::size_t j = 0; j < phi.size(); ++j) layout.design(i, j) = phi[j];
  }
  return layout;
}

Eigen::VectorXd weighted_residual(const Eigen::MatrixXd& design, const Eigen::VectorXd& values,
                                  const Eigen::VectorXd& weights) {
  const Eigen::VectorXd sw = weights.cwiseSqrt();
  const Eigen::MatrixXd a = sw.asDiagonal() * design;
  const Eigen::VectorXd b = sw.asDiagonal() * values;
  const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
  return values - design * c;
}

// Local best-fit error of one cube, in the cube-normalized sense:
// (sum_i w_i |e_i|^p)^(1/p) for finite p, max |e_i| for p = inf.
double local_fit_error(const FitLayout& layout, const Eigen::VectorXd& values, double p,
                       const BestFitSpec& spec) {
  const auto n = static_cast<Eigen::Index>(layout.count);
  const Eigen::VectorXd base = Eigen::Map<const Eigen::VectorXd>(layout.weights.data(), n);
  const double scale = values.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  if (p == 2.0) {
    const Eigen::VectorXd e = weighted_residual(layout.design, values, base);
    return std::sqrt(base.dot(e.cwiseAbs2()));
  }
  if (std::isinf(p)) {
    // Lawson: w <- w |e| / sum(w |e|); sqrt(sum w e^2) <= E* <= max |e|.
    Eigen::VectorXd w = base;
    double upper = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < spec.max_iterations; ++iter) {
      const Eigen::VectorXd e = weighted_residual(layout.design, values, w);
      const Eigen::VectorXd abs_e = e.cwiseAbs();
      upper = std::min(upper, abs_e.maxCoeff());
      const double lower = std::sqrt(w.dot(e.cwiseAbs2()));
      if (upper <= 1e-14 * scale || upper - lower <= spec.sup_gap * upper) break;
      w = w.cwiseProduct(abs_e);
      const double total = w.sum();
      if (!(total > 0.0)) break;
      w /= total;
    }
    return upper;
  }
  // IRLS for finite p: weights base * max(|e|, delta)^(p - 2).
  Eigen::VectorXd w = base;
  double previous = std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  const double delta = 1e-12 * scale;
  for (int iter = 0; iter < spec.max_iterations; ++iter) {
    const Eigen::VectorXd e = weighted_residual(layout.design, values, w);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) sum += base[i] * std::pow(std::abs(e[i]), p);
    const double err = std::pow(sum, 1.0 / p);
    best = std::min(best, err);
    if (std::abs(previous - err) <= spec.tolerance * std::max(err, 1e-300)) break;
    previous = err;
    for (Eigen::Index i = 0; i < n; ++i) {
      w[i] = base[i] * std::pow(std::max(std::abs(e[i]), delta), p - 2.0);
    }
  }
  return best;
}

}  // namespace

double distance_to_level(const PointFunction& f, int d, int k, int r, double p,
                         const BestFitSpec& spec) {
  if (!(p > 0.0)) throw PreconditionError("distance_to_level: p must be > 0");
  const FitLayout layout = make_layout(d, r, p, spec);
  const std::size_t cubes = std::size_t{1} << (k * d);
  const double side = std::ldexp(1.0, -k);
  Eigen::VectorXd values(static_cast<Eigen::Index>(layout.count));
  std::vector<double> x(d);
  double accumulated = 0.0;
  for (std::size_t c = 0; c < cubes; ++c) {
    const DyadicCube cube = cube_from_index(k, d, c);
    for (std::size_t i = 0; i < layout.count; ++i) {
      for (int j = 0; j < d; ++j) x[j] = cube.corner(j) + side * layout.points[i * d + j];
      values[static_cast<Eigen::Index>(i)] = f(x);
    }
    const double local = local_fit_error(layout, values, p, spec);
    if (std::isinf(p)) {
      accumulated = std::max(accumulated, local);
    } else {
      accumulated += cube.volume() * std::pow(local, p);
    }
  }
  return std::isinf(p) ? accumulated : std::pow(accumulated, 1.0 / p);
}

BesovEstimate besov_seminorm_pwp(const PointFunction& f, int d, double s, double p, int r,
                                 int k_max, const BestFitSpec& spec) {
  if (!(r > s)) throw PreconditionError("besov_seminorm_pwp: requires r > s");
  if (k_max < 2) throw PreconditionError("besov_seminorm_pwp: requires k_max >= 2");
  BesovEstimate est;
  for (int k = 1; k <= k_max; ++k) {
    const double dist = distance_to_level(f, d, k, r, p, spec);
    est.distances.push_back(dist);
    const double scaled = std::exp2(k * s) * dist;
    if (scaled > est.value) {
      est.value = scaled;
      est.argmax_level = k;
    }
  }
  return est;
}

BesovEstimate besov_seminorm_pwp(const PointFunction& f, int d, double s, double p, int r,
                                 int k_max) {
  return besov_seminorm_pwp(f, d, s, p, r, k_max, BestFitSpec::for_dim(d));
}

RateFit rate_fit(std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 3) throw PreconditionError("rate_fit: >= 3 points required");
  RateFit fit;
  for (const auto& [x, y] : pairs) {
    if (!(x > 0.0) || !(y > 0.0)) throw DomainError("rate_fit: nonpositive input");
    fit.log_pairs.emplace_back(std::log(x), std::log(y));
  }
  const double n = static_cast<double>(pairs.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [lx, ly] : fit.log_pairs) {
    mx += lx;
    my += ly;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [lx, ly] : fit.log_pairs) {
    sxx += (lx - mx) * (lx - mx);
    sxy += (lx - mx) * (ly - my);
    syy += (ly - my) * (ly - my);
  }
  if (sxx == 0.0) throw DomainError("rate_fit: all x values coincide");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

std::uint64_t trial_seed(std::uint64_t base, std::size_t setting, std::size_t trial) {
  return rng::derive_seed(base, setting, trial);
}

std::vector<RiskPoint> risk_curve(const EstimatorConfig& config, const FunctionOracle& oracle,
                                  const RiskSweep& sweep) {
  if (sweep.trials < 1) throw PreconditionError("risk_curve: trials must be >= 1");
  validate(config);
  std::vector<RiskPoint> points;
  if (sweep.axis == SweepAxis::m) {
    for (int n : sweep.n_list) points.push_back(RiskPoint{n, 0.0, sweep.fixed_sigma, 0, 0, {}});
  } else {
    for (double sigma : sweep.sigma_list) points.push_back(RiskPoint{sweep.fixed_n, 0.0, sigma, 0, 0, {}});
  }
  const int r = config.order();
  const auto trials = static_cast<std::size_t>(sweep.trials);
  for (auto& point : points) {
    point.m = std::ldexp(1.0, point.n * config.d);
    point.trials.resize(trials);
  }
  parallel_for(points.size() * trials, sweep.threads, [&](std::size_t job) {
    const std::size_t setting = job / trials;
    const std::size_t t = job % trials;
    RiskPoint& point = points[setting];
    RiskTrial& trial = point.trials[t];
    const auto start = std::chrono::steady_clock::now();
    trial.seed = trial_seed(sweep.seed, setting, t);
    EstimatorConfig local = config;
    local.sigma = point.sigma;
    const SampleGrid grid = build_grid(point.n, config.d);
    const ObservationSet obs = observe(oracle, grid, point.sigma, sweep.noise, trial.seed);
    const EstimateResult result = estimate_detailed(obs, local);
    trial.step0_zero = result.step0_zero;
    QuadratureSpec spec{point.n + sweep.quadrature_offset,
                        sweep.quadrature_nodes > 0 ? sweep.quadrature_nodes : r + 2};
    trial.lq_error = lq_distance(oracle, result.estimate, config.q, spec);
    trial.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  });
  for (auto& point : points) {
    double sum = 0.0;
    for (const auto& t : point.trials) sum += t.lq_error;
    point.mean = sum / static_cast<double>(trials);
    double sq = 0.0;
    for (const auto& t : point.trials) sq += (t.lq_error - point.mean) * (t.lq_error - point.mean);
    point.stddev = trials > 1 ? std::sqrt(sq / static_cast<double>(trials - 1)) : 0.0;
  }
  return points;
}

}  // namespace besovreg
