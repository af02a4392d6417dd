#include "besovreg/oracles.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <numbers>
#include <set>

#include "besovreg/analysis.hpp"
#include "besovreg/error.hpp"
#include "besovreg/multiscale.hpp"
#include "besovreg/parallel.hpp"
#include "besovreg/polybasis.hpp"
#include "besovreg/quadrature.hpp"
#include "besovreg/rng.hpp"
#include "besovreg/shrinkage.hpp"

namespace besovreg {

double mollifier_1d(double t) noexcept {
  const double u = 2.0 * t - 1.0;
  const double u2 = u * u;
  if (!(u2 < 1.0)) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - u2));
}

double mollifier(std::span<const double> x) noexcept {
  double value = 1.0;
  for (double t : x) {
    value *= mollifier_1d(t);
    if (value == 0.0) return 0.0;
  }
  return value;
}

double mollifier_lq_norm(int d, double q) {
  if (!(q >= 1.0)) throw PreconditionError("mollifier_lq_norm: q must be >= 1");
  if (std::isinf(q)) return 1.0;
  const std::vector<double> lo{0.0};
  const std::vector<double> hi{1.0};
  double integral = 0.0;
  for_each_composite_node(lo, hi, 64, 10, [&](std::span<const double> x, double w) {
    integral += w * std::pow(mollifier_1d(x[0]), q);
  });
  return std::pow(integral, d / q);
}

double BumpFunction::operator()(std::span<const double> x) const noexcept {
  double value = amplitude;
  for (std::size_t j = 0; j < x.size(); ++j) {
    value *= mollifier_1d(cells_per_axis * (x[j] - corner[j]));
    if (value == 0.0) return 0.0;
  }
  return value;
}

// ---------------------------------------------------------------------------
// Targets

namespace {

class ParamReader {
 public:
  ParamReader(const TargetSpec& spec) : spec_(spec) {}

  double get(const std::string& key, double fallback) {
    used_.insert(key);
    const auto it = spec_.params.find(key);
    return it == spec_.params.end() ? fallback : it->second;
  }
  int get_int(const std::string& key, int fallback) {
    const double v = get(key, fallback);
    if (v != std::floor(v)) {
      throw PreconditionError("target '" + spec_.name + "': parameter '" + key +
                              "' must be an integer");
    }
    return static_cast<int>(v);
  }
  void finish() const {
    for (const auto& [key, value] : spec_.params) {
      if (!used_.contains(key)) {
        throw PreconditionError("target '" + spec_.name + "': unknown parameter '" + key + "'");
      }
    }
  }

 private:
  const TargetSpec& spec_;
  std::set<std::string> used_;
};

double radial_distance(std::span<const double> x, double center) {
  double sq = 0.0;
  for (double v : x) sq += (v - center) * (v - center);
  return std::sqrt(sq);
}

}  // namespace

std::vector<std::string> target_names() {
  return {"zero", "poly", "piecewise", "bump", "cusp", "kink"};
}

FunctionOracle make_target(const TargetSpec& spec, int d) {
  if (d < 1) throw PreconditionError("make_target: d must be >= 1");
  ParamReader params(spec);
  FunctionOracle oracle;
  const std::string& name = spec.name;
  if (name == "zero") {
    oracle.evaluator = [](std::span<const double>) { return 0.0; };
    oracle.descriptor = "zero";
  } else if (name == "poly") {
    const int r = params.get_int("r", 3);
    const auto seed = static_cast<std::uint64_t>(params.get_int("seed", 1));
    const double scale = params.get("scale", 1.0);
    if (r < 1) throw PreconditionError("target 'poly': r must be >= 1");
    auto space = std::make_shared<const PolySpace>(r, d);
    std::vector<double> coeffs(space->rho());
    for (std::size_t j = 0; j < coeffs.size(); ++j) coeffs[j] = scale * rng::normal_at(seed, j);
    oracle.evaluator = [space, coeffs](std::span<const double> x) {
      double sum = 0.0;
      for (std::size_t j = 0; j < coeffs.size(); ++j) {
        double term = coeffs[j];
        const auto alpha = space->exponent(j);
        for (std::size_t a = 0; a < x.size(); ++a) {
          for (int e = 0; e < alpha[a]; ++e) term *= x[a];
        }
        sum += term;
      }
      return sum;
    };
    oracle.descriptor = "poly(r=" + std::to_string(r) + ")";
  } else if (name == "piecewise") {
    const int k = params.get_int("k", 2);
    const int r = params.get_int("r", 3);
    const auto seed = static_cast<std::uint64_t>(params.get_int("seed", 1));
    const double scale = params.get("scale", 1.0);
    if (k < 0 || r < 1) throw PreconditionError("target 'piecewise': need k >= 0 and r >= 1");
    auto space = std::make_shared<const PolySpace>(r, d);
    const std::size_t rho = space->rho();
    const std::size_t cells = std::size_t{1} << (k * d);
    std::vector<double> coeffs(cells * rho);
    for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] = scale * rng::normal_at(seed, i);
    oracle.evaluator = [space, coeffs, k, rho](std::span<const double> x) {
      const std::size_t cell = locate_index(x, k);
      const DyadicCube cube = cube_from_index(k, static_cast<int>(x.size()), cell);
      std::vector<double> u(x.size());
      cube.to_local(x, u);
      std::vector<double> phi(rho);
      space->reference_values(u, phi);
      double sum = 0.0;
      for (std::size_t j = 0; j < rho; ++j) sum += coeffs[cell * rho + j] * phi[j];
      return sum;
    };
    oracle.descriptor = "piecewise(k=" + std::to_string(k) + ",r=" + std::to_string(r) + ")";
    oracle.declared_smoothness = [](double p) { return 1.0 / p; };
  } else if (name == "bump") {
    const double center = params.get("center", 0.5);
    const double width = params.get("width", 0.5);
    const double amplitude = params.get("amplitude", 1.0);
    if (!(width > 0.0)) throw PreconditionError("target 'bump': width must be > 0");
    oracle.evaluator = [center, width, amplitude](std::span<const double> x) {
      double value = amplitude;
      for (double v : x) value *= mollifier_1d((v - center) / width + 0.5);
      return value;
    };
    oracle.descriptor = "bump";
  } else if (name == "cusp") {
    const double center = params.get("center", 1.0 / 3.0);
    const double gamma = params.get("gamma", 1.5);
    const double width = params.get("width", 3.0);
    const double amplitude = params.get("amplitude", 1.0);
    if (!(gamma > 0.0) || !(width > 0.0)) {
      throw PreconditionError("target 'cusp': gamma and width must be > 0");
    }
    oracle.evaluator = [center, gamma, width, amplitude](std::span<const double> x) {
      double value = amplitude * std::pow(radial_distance(x, center), gamma);
      for (double v : x) value *= mollifier_1d((v - center) / width + 0.5);
      return value;
    };
    oracle.descriptor = "cusp(gamma=" + std::to_string(gamma) + ")";
    oracle.declared_smoothness = [gamma, d](double p) { return gamma + d / p; };
  } else if (name == "kink") {
    const double center = params.get("center", 1.0 / 3.0);
    const double amplitude = params.get("amplitude", 1.0);
    oracle.evaluator = [center, amplitude](std::span<const double> x) {
      return amplitude * std::abs(x[0] - center);
    };
    oracle.descriptor = "kink";
    oracle.declared_smoothness = [](double p) { return 1.0 + 1.0 / p; };
  } else {
    throw PreconditionError("unknown target '" + name + "'");
  }
  params.finish();
  return oracle;
}

// ---------------------------------------------------------------------------
// Packing

namespace {

using Word = std::uint64_t;

std::size_t word_count(int P) { return (static_cast<std::size_t>(P) + 63) / 64; }

int hamming(const std::vector<Word>& a, const std::vector<Word>& b) {
  int distance = 0;
  for (std::size_t w = 0; w < a.size(); ++w) distance += std::popcount(a[w] ^ b[w]);
  return distance;
}

}  // namespace

int min_hamming_distance(const std::vector<std::vector<int>>& vectors) {
  int best = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = i + 1; j < vectors.size(); ++j) {
      int distance = 0;
      for (std::size_t c = 0; c < vectors[i].size(); ++c) distance += vectors[i][c] != vectors[j][c];
      best = std::min(best, distance);
    }
  }
  return best;
}

PackingSigns packing_signs(int P, int target_distance, std::uint64_t seed, std::size_t budget,
                           std::size_t max_members) {
  if (P < 4) throw BudgetError("packing_signs: P < 4 admits no family at distance P/4");
  if (target_distance < 1 || 2 * target_distance > P) {
    throw PreconditionError("packing_signs: target distance must lie in [1, P/2]");
  }
  const std::size_t words = word_count(P);
  const Word tail_mask = (P % 64 == 0) ? ~Word{0} : ((Word{1} << (P % 64)) - 1);
  rng::Xoshiro256 gen(seed);
  std::vector<std::vector<Word>> kept;
  PackingSigns result;
  result.length = P;
  std::vector<Word> draw(words);
  while (result.draws < budget && kept.size() < max_members) {
    ++result.draws;
    for (auto& w : draw) w = gen();
    draw.back() &= tail_mask;
    const bool far = std::all_of(kept.begin(), kept.end(), [&](const std::vector<Word>& v) {
      return hamming(v, draw) >= target_distance;
    });
    if (far) kept.push_back(draw);
  }
  if (kept.size() < 2) throw BudgetError("packing_signs: draw budget exhausted with < 2 vectors");
  for (const auto& v : kept) {
    std::vector<int> signs(P);
    for (int c = 0; c < P; ++c) signs[c] = ((v[c / 64] >> (c % 64)) & 1U) ? -1 : 1;
    result.vectors.push_back(std::move(signs));
  }
  result.min_distance = min_hamming_distance(result.vectors);
  return result;
}

int PackingFamily::cell_count() const noexcept {
  int count = 1;
  for (int j = 0; j < d; ++j) count *= n_cells;
  return count;
}

namespace {

// sum_i sign_i amplitude mollifier(n x - idx_i) on the uniform n^d partition.
PointFunction signed_bumps(int n_cells, double amplitude, std::vector<int> signs) {
  return [n_cells, amplitude, signs = std::move(signs)](std::span<const double> x) {
    std::size_t cell = 0;
    double value = amplitude;
    for (double v : x) {
      const double scaled = v * n_cells;
      const auto idx = std::clamp(static_cast<int>(std::floor(scaled)), 0, n_cells - 1);
      cell = cell * static_cast<std::size_t>(n_cells) + static_cast<std::size_t>(idx);
      value *= mollifier_1d(scaled - idx);
      if (value == 0.0) return 0.0;
    }
    return signs[cell] * value;
  };
}

int ceil_log2(int n) {
  int k = 0;
  while ((1 << k) < n) ++k;
  return k;
}

int seminorm_order(double s) { return static_cast<int>(std::floor(s)) + 1; }

}  // namespace

FunctionOracle PackingFamily::member(std::size_t i) const {
  FunctionOracle oracle;
  oracle.evaluator = signed_bumps(n_cells, amplitude, signs.vectors.at(i));
  oracle.descriptor = "packing member " + std::to_string(i);
  return oracle;
}

PackingFamily build_packing_family(int n_cells, double s, double gamma, int d, double q, double p,
                                   const PackingOptions& options) {
  if (!(gamma > 0.0)) throw PreconditionError("build_packing_family: gamma must be > 0");
  if (n_cells < 1 || d < 1) throw PreconditionError("build_packing_family: need n_cells, d >= 1");
  PackingFamily family;
  family.n_cells = n_cells;
  family.d = d;
  family.s = s;
  family.p = p;
  family.q = q;
  family.gamma = gamma;
  family.amplitude = gamma * std::pow(static_cast<double>(n_cells), -s);
  const int P = family.cell_count();
  family.signs = packing_signs(P, (P + 3) / 4, options.seed, options.budget, options.max_members);

  const double phi_norm = mollifier_lq_norm(d, q);
  const int H = family.signs.min_distance;
  family.min_separation =
      std::isinf(q) ? 2.0 * family.amplitude
                    : 2.0 * family.amplitude * std::pow(static_cast<double>(H) / P, 1.0 / q) *
                          phi_norm;
  family.c0 = family.min_separation / family.amplitude;

  // Quadrature on the first pair at the certified minimum distance.
  const auto& v = family.signs.vectors;
  const QuadratureSpec spec{ceil_log2(n_cells) + (d == 1 ? 4 : 2), 8};
  bool measured = false;
  for (std::size_t i = 0; i < v.size() && !measured; ++i) {
    for (std::size_t j = i + 1; j < v.size() && !measured; ++j) {
      int distance = 0;
      for (int c = 0; c < P; ++c) distance += v[i][c] != v[j][c];
      if (distance == H) {
        family.min_separation_measured =
            lq_distance(family.member(i).evaluator, family.member(j).evaluator, d, q, spec);
        measured = true;
      }
    }
  }

  const int r = seminorm_order(s);
  const int k_max = std::max(2, ceil_log2(n_cells) + options.extra_levels);
  family.seminorm_members = std::min(options.seminorm_members, family.size());
  for (std::size_t i = 0; i < family.seminorm_members; ++i) {
    const BesovEstimate est = besov_seminorm_pwp(family.member(i).evaluator, d, s, p, r, k_max);
    family.max_seminorm = std::max(family.max_seminorm, est.value);
  }
  return family;
}

PackingFamily calibrate_packing_family(int n_cells, double s, int d, double q, double p,
                                       const PackingOptions& options) {
  const PackingFamily unit = build_packing_family(n_cells, s, 1.0, d, q, p, options);
  if (!(unit.max_seminorm > 0.0)) {
    throw DomainError("calibrate_packing_family: seminorm estimate vanished");
  }
  return build_packing_family(n_cells, s, 0.5 / unit.max_seminorm, d, q, p, options);
}

FoolingPair fooling_pair(const SampleGrid& grid, double s, double p, double q, int d,
                         bool calibrate) {
  if (grid.dim() != d) throw PreconditionError("fooling_pair: grid dimension mismatch");
  FoolingPair pair;
  pair.n = grid.level();
  pair.d = d;
  pair.s = s;
  pair.p = p;
  pair.q = q;
  pair.full_cover = p >= q;
  const int per_axis = 1 << pair.n;
  const double h = 1.0 / per_axis;
  const double m = static_cast<double>(grid.size());
  const double gap = std::max(0.0, 1.0 / p - 1.0 / q);
  pair.rate = std::pow(m, -s / d + gap);

  // Unit-gamma profile g0 / gamma.
  const double unit_amplitude = pair.full_cover ? std::pow(h, s) : std::pow(h, s - d / p);
  PointFunction unit;
  if (pair.full_cover) {
    unit = signed_bumps(per_axis, unit_amplitude, std::vector<int>(grid.size(), 1));
  } else {
    BumpFunction bump;
    bump.cells_per_axis = per_axis;
    bump.amplitude = unit_amplitude;
    bump.corner.assign(d, h * (per_axis / 3));
    unit = [bump](std::span<const double> x) { return bump(x); };
  }

  pair.gamma = 1.0;
  if (calibrate) {
    const int extra = d == 1 ? 3 : (d == 2 ? 2 : 1);
    const BesovEstimate est =
        besov_seminorm_pwp(unit, d, s, p, seminorm_order(s), std::max(2, pair.n + extra));
    if (!(est.value > 0.0)) throw DomainError("fooling_pair: seminorm estimate vanished");
    pair.gamma = 0.5 / est.value;
    pair.seminorm = 0.5;
  }
  pair.amplitude = pair.gamma * unit_amplitude;
  const double gamma = pair.gamma;
  pair.f.evaluator = [unit, gamma](std::span<const double> x) { return gamma * unit(x); };
  pair.g.evaluator = [unit, gamma](std::span<const double> x) { return -gamma * unit(x); };
  pair.f.descriptor = "fooling +g0";
  pair.g.descriptor = "fooling -g0";

  const double phi_norm = mollifier_lq_norm(d, q);
  const double g0_norm = pair.full_cover || std::isinf(q)
                             ? pair.amplitude * phi_norm
                             : pair.amplitude * std::pow(h, d / q) * phi_norm;
  pair.separation = 2.0 * g0_norm;
  pair.constant = pair.separation / pair.rate;

  for (std::size_t i = 0; i < grid.size(); ++i) {
    pair.max_abs_grid_value = std::max(
        {pair.max_abs_grid_value, std::abs(pair.f(grid.point(i))), std::abs(pair.g(grid.point(i)))});
  }
  return pair;
}

nlohmann::json manifest(const PackingFamily& family) {
  return {
      {"kind", "packing"},
      {"n_cells", family.n_cells},
      {"d", family.d},
      {"s", family.s},
      {"p", family.p},
      {"q", family.q},
      {"P", family.cell_count()},
      {"size", family.size()},
      {"gamma", family.gamma},
      {"amplitude", family.amplitude},
      {"certified_min_distance", family.signs.min_distance},
      {"draws", family.signs.draws},
      {"min_separation", family.min_separation},
      {"min_separation_measured", family.min_separation_measured},
      {"c0", family.c0},
      {"max_seminorm", family.max_seminorm},
      {"seminorm_members", family.seminorm_members},
  };
}

nlohmann::json manifest(const FoolingPair& pair) {
  return {
      {"kind", "fooling"},
      {"n", pair.n},
      {"d", pair.d},
      {"s", pair.s},
      {"p", pair.p},
      {"q", pair.q},
      {"gamma", pair.gamma},
      {"amplitude", pair.amplitude},
      {"full_cover", pair.full_cover},
      {"separation", pair.separation},
      {"rate", pair.rate},
      {"constant", pair.constant},
      {"seminorm", pair.seminorm},
      {"max_abs_grid_value", pair.max_abs_grid_value},
  };
}

// ---------------------------------------------------------------------------
// Thresholding checks

bool check_pointwise_thresh(double x, double e, double lambda) noexcept {
  const double lhs = std::abs(hard_threshold(x + e, lambda) - x);
  const double rhs = 3.0 * (std::min(std::abs(x), lambda) + std::abs(hard_threshold(e, lambda / 2)));
  return lhs <= rhs;
}

DeterministicBound check_deterministic_bound(std::span<const double> v,
                                             std::span<const double> xi, double lambda,
                                             double p, double q) {
  if (v.size() != xi.size() || v.empty()) {
    throw PreconditionError("check_deterministic_bound: v and xi must have equal nonzero length");
  }
  if (!(p > 0.0) || !(q >= 1.0) || p > q || !(lambda >= 0.0)) {
    throw PreconditionError("check_deterministic_bound: need 0 < p <= q, q >= 1, lambda >= 0");
  }
  const std::size_t L = v.size();
  std::vector<double> diff(L), clipped(L), xi_half(L);
  for (std::size_t i = 0; i < L; ++i) {
    diff[i] = v[i] - hard_threshold(v[i] + xi[i], lambda);
    clipped[i] = std::min(std::abs(v[i]), lambda);
    xi_half[i] = hard_threshold(xi[i], lambda / 2);
  }
  DeterministicBound out;
  const double noise = weighted_norm(xi_half, q);
  out.error = weighted_norm(diff, q);
  out.middle = 3.0 * (weighted_norm(clipped, q) + noise);
  const double vp = weighted_norm(v, p);
  const double det = lambda == 0.0 ? (p == q ? vp : 0.0)
                                   : std::pow(vp, p / q) * std::pow(lambda, 1.0 - p / q);
  out.bound = 3.0 * (det + noise);
  constexpr double kSlack = 1e-12;
  out.ok = out.error <= out.middle * (1 + kSlack) + 1e-300 &&
           out.middle <= out.bound * (1 + kSlack) + 1e-300;
  return out;
}

SuiteCount pointwise_suite(std::size_t triples, std::uint64_t seed) {
  SuiteCount count;
  rng::Xoshiro256 gen(seed);
  auto uniform = [&gen] { return rng::unit_open_closed(gen()); };
  for (std::size_t i = 0; i < triples; ++i) {
    const double lambda = 3.0 * uniform();
    const double x = (uniform() - 0.5) * 4.0 * lambda;
    const double e = (uniform() - 0.5) * 4.0 * lambda;
    ++count.instances;
    if (!check_pointwise_thresh(x, e, lambda)) ++count.violations;
  }
  return count;
}

SuiteCount deterministic_suite(std::size_t instances, std::uint64_t seed) {
  SuiteCount count;
  rng::Xoshiro256 gen(seed);
  auto uniform = [&gen] { return rng::unit_open_closed(gen()); };
  std::vector<double> v, xi;
  for (std::size_t i = 0; i < instances; ++i) {
    const auto L = 1 + static_cast<std::size_t>(gen() % 64);
    const double q = 1.0 + 3.0 * uniform();
    const double p = 0.5 + (q - 0.5) * uniform();
    const double lambda = 2.0 * uniform();
    const double v_scale = std::exp2(6.0 * uniform() - 4.0);
    const double xi_scale = std::exp2(6.0 * uniform() - 4.0);
    v.resize(L);
    xi.resize(L);
    for (std::size_t j = 0; j < L; ++j) {
      double a = 0.0, b = 0.0;
      gen.normal_pair(a, b);
      v[j] = (uniform() < 0.3) ? 0.0 : v_scale * a;
      xi[j] = xi_scale * b;
    }
    ++count.instances;
    if (!check_deterministic_bound(v, xi, lambda, p, q).ok) ++count.violations;
  }
  return count;
}

// ---------------------------------------------------------------------------
// Gaussian tails

std::vector<std::vector<double>> mc_tail_norms(std::span<const double> lambdas,
                                               double sigma_tilde, std::size_t L, double q,
                                               std::size_t trials, std::uint64_t seed,
                                               unsigned threads) {
  if (L == 0 || !(q >= 1.0) || !(sigma_tilde >= 0.0)) {
    throw PreconditionError("mc_tail: need L >= 1, q >= 1, sigma >= 0");
  }
  std::vector<std::vector<double>> norms(lambdas.size(), std::vector<double>(trials, 0.0));
  const bool square = q == 2.0;
  parallel_for(trials, threads, [&](std::size_t t) {
    rng::Xoshiro256 gen(rng::derive_seed(seed, t));
    std::vector<double> sums(lambdas.size(), 0.0);
    std::vector<double> cut(lambdas.size());
    for (std::size_t l = 0; l < lambdas.size(); ++l) cut[l] = lambdas[l] / 2;
    auto accumulate = [&](double z) {
      const double a = std::abs(sigma_tilde * z);
      const double power = square ? a * a : std::pow(a, q);
      for (std::size_t l = 0; l < cut.size(); ++l) {
        if (a > cut[l]) sums[l] += power;
      }
    };
    for (std::size_t i = 0; i < L; i += 2) {
      double a = 0.0, b = 0.0;
      gen.normal_pair(a, b);
      accumulate(a);
      if (i + 1 < L) accumulate(b);
    }
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
      const double mean = sums[l] / static_cast<double>(L);
      norms[l][t] = square ? std::sqrt(mean) : std::pow(mean, 1.0 / q);
    }
  });
  return norms;
}

std::vector<TailRow> mc_tail(double lambda, double sigma_tilde, std::size_t L, double q,
                             std::span<const double> T_grid, std::size_t trials,
                             std::uint64_t seed, unsigned threads) {
  if (trials < 1000) throw PreconditionError("mc_tail: trials must be >= 1000");
  const double lambdas[] = {lambda};
  const auto norms = mc_tail_norms(lambdas, sigma_tilde, L, q, trials, seed, threads);
  std::vector<TailRow> rows;
  for (double T : T_grid) {
    TailRow row;
    row.T = T;
    row.exceedances = static_cast<std::size_t>(
        std::count_if(norms[0].begin(), norms[0].end(), [T](double v) { return v >= T; }));
    row.frequency = static_cast<double>(row.exceedances) / static_cast<double>(trials);
    rows.push_back(row);
  }
  return rows;
}

double tail_envelope(double T, double lambda, double sigma_tilde, double q, double C_env) {
  if (!(T > 0.0) || !(sigma_tilde > 0.0)) {
    throw PreconditionError("tail_envelope: need T > 0 and sigma > 0");
  }
  const double b = std::max(lambda / 2, std::pow(2.0, -1.0 / q) * T);
  return C_env * std::pow(T, -q) * std::pow(sigma_tilde, q) *
         std::exp(-b * b / (4 * sigma_tilde * sigma_tilde));
}

TailSlope tail_slope(double lambda, std::span<const double> norms, double sigma_tilde, double q,
                     double freq_lo, double freq_hi, int grid_points) {
  if (norms.empty() || grid_points < 3) throw PreconditionError("tail_slope: empty sample");
  std::vector<double> sorted(norms.begin(), norms.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const auto n = static_cast<double>(sorted.size());
  TailSlope out;
  out.lambda = lambda;
  std::vector<double> thresholds;
  for (int g = 0; g < grid_points; ++g) {
    const double target =
        freq_hi * std::pow(freq_lo / freq_hi, static_cast<double>(g) / (grid_points - 1));
    const auto index = static_cast<std::size_t>(std::ceil(target * n)) - 1;
    if (index >= sorted.size()) continue;
    const double T = sorted[index];
    if (!(T > 0.0)) continue;
    if (!thresholds.empty() && T == thresholds.back()) continue;
    thresholds.push_back(T);
  }
  std::vector<std::pair<double, double>> b_pairs, t_pairs;
  for (double T : thresholds) {
    // count of norms >= T in the descending sample
    const auto count = static_cast<std::size_t>(
        std::upper_bound(sorted.begin(), sorted.end(), T, std::greater<>()) - sorted.begin());
    TailRow row{T, count / n, count};
    if (row.frequency < freq_lo || row.frequency > freq_hi) continue;
    out.rows.push_back(row);
    const double t_branch = std::pow(2.0, -1.0 / q) * T / sigma_tilde;
    const double b = std::max(lambda / (2 * sigma_tilde), t_branch);
    b_pairs.emplace_back(b * b, std::log(row.frequency));
    t_pairs.emplace_back(t_branch * t_branch, std::log(row.frequency));
  }
  out.points = out.rows.size();
  if (out.points < 3) throw DomainError("tail_slope: fewer than 3 usable thresholds");
  auto slope_of = [](const std::vector<std::pair<double, double>>& pairs) {
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : pairs) {
      mx += x;
      my += y;
    }
    mx /= pairs.size();
    my /= pairs.size();
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : pairs) {
      sxx += (x - mx) * (x - mx);
      sxy += (x - mx) * (y - my);
    }
    return std::pair{sxx, sxx > 0.0 ? sxy / sxx : 0.0};
  };
  const auto [sxx_b, slope_b] = slope_of(b_pairs);
  const double spread = b_pairs.back().first - b_pairs.front().first;
  if (sxx_b > 0.0 && std::abs(spread) > 1e-12 * b_pairs.front().first) {
    out.slope = slope_b;
  } else {
    out.t_branch = true;
    out.slope = slope_of(t_pairs).second;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gaussian shift

ShiftMass gaussian_shift_mass(double y_norm, double sigma, double alpha_bar, int m_dim,
                              ShiftOrientation orientation) {
  if (!(alpha_bar > 0.0) || !(alpha_bar < 0.2)) {
    throw PreconditionError("gaussian_shift_mass: need 0 < alpha_bar < 1/5");
  }
  if (!(sigma > 0.0) || !(y_norm >= 0.0) || m_dim < 1) {
    throw PreconditionError("gaussian_shift_mass: need sigma > 0, y_norm >= 0, m_dim >= 1");
  }
  if (!(y_norm * y_norm < -sigma * sigma * std::log(5.0 * alpha_bar))) {
    throw PreconditionError("gaussian_shift_mass: need y_norm^2 < -sigma^2 ln(5 alpha_bar)");
  }
  // The mass of a halfspace only depends on the component of the shift normal
  // to it, so the problem reduces to one dimension for every m_dim.
  const boost::math::normal_distribution<double> standard;
  const double edge = boost::math::quantile(standard, alpha_bar);
  const double shift = y_norm / sigma;
  ShiftMass out;
  out.mass = boost::math::cdf(standard, orientation == ShiftOrientation::toward_shift
                                            ? edge + shift
                                            : edge - shift);
  out.bound_ok = out.mass < 0.5;
  return out;
}

SuiteCount gaussian_shift_sweep(int alpha_points, int y_points, double sigma) {
  SuiteCount count;
  for (int a = 0; a < alpha_points; ++a) {
    // log-spaced in [1e-8, 0.199]
    const double alpha =
        1e-8 * std::pow(0.199 / 1e-8, static_cast<double>(a) / std::max(1, alpha_points - 1));
    const double y_max = sigma * std::sqrt(-std::log(5.0 * alpha));
    for (int i = 0; i < y_points; ++i) {
      const double y = y_max * (1.0 - 1e-9) * i / std::max(1, y_points - 1);
      for (auto orientation : {ShiftOrientation::toward_shift, ShiftOrientation::against_shift}) {
        ++count.instances;
        if (!gaussian_shift_mass(y, sigma, alpha, 1, orientation).bound_ok) ++count.violations;
      }
    }
  }
  return count;
}

// ---------------------------------------------------------------------------
// Integral and series lemmas

double scaled_gaussian_moment_tail(double a, double q) {
  if (!(a >= 0.0) || !(q > 0.0)) throw PreconditionError("moment tail: need a >= 0, q > 0");
  boost::math::quadrature::exp_sinh<double> integrator;
  auto integrand = [a, q](double t) {
    const double x = a + t;
    if (x == 0.0) return 0.0;
    return std::exp(q * std::log(x) - a * t - 0.5 * t * t - 0.25 * a * a);
  };
  double error = 0.0;
  double l1 = 0.0;
  double value = 0.0;
  try {
    value = integrator.integrate(integrand, 1e-12, &error, &l1);
  } catch (const std::exception& e) {
    throw QuadratureError(std::string("moment tail quadrature failed: ") + e.what());
  }
  if (!std::isfinite(value) || error > 1e-8 * std::max(l1, 1e-300)) {
    throw QuadratureError("moment tail quadrature did not converge");
  }
  return value;
}

double gaussian_moment_tail(double a, double q) {
  return scaled_gaussian_moment_tail(a, q) * std::exp(-0.25 * a * a);
}

double series_ratio(double a, double b, double c, double tau) {
  if (!(b > 0.0) || !(c > 0.0) || !(tau > 0.0) || a < 0.0) {
    throw PreconditionError("series_ratio: need a >= 0 and b, c, tau > 0");
  }
  double sum = 0.0;
  for (int k = 0; k < 4096; ++k) {
    const double exponent = a * k * std::numbers::ln2 - c * (std::exp2(b * k) - 1.0) * tau;
    const double term = std::exp(exponent);
    sum += term;
    // terms decrease super-exponentially once c 2^(bk) b ln2 tau > a ln2
    if (k > 0 && term < 1e-18 * sum && c * std::exp2(b * k) * b * tau > a) break;
  }
  return sum;
}

std::vector<SeriesParams> default_series_grid() {
  std::vector<SeriesParams> grid;
  for (double a : {0.0, 0.5, 1.0, 2.0}) {
    for (double b : {0.5, 1.0, 2.0}) {
      for (double c : {0.5, 1.0, 2.0}) grid.push_back({a, b, c});
    }
  }
  return grid;
}

bool LemmaReport::passed() const noexcept {
  const bool moments_ok = std::all_of(moments.begin(), moments.end(), [](const MomentRow& r) {
    return r.bounded && r.monotone_tail;
  });
  const bool series_ok = std::all_of(series.begin(), series.end(), [](const SeriesRow& r) {
    return r.finite && r.stable;
  });
  return moments_ok && series_ok && !moments.empty() && !series.empty();
}

LemmaReport quadrature_lemma_checks(std::span<const double> q_list,
                                    std::span<const double> a_grid,
                                    std::span<const double> tau_grid,
                                    const std::vector<SeriesParams>& abc) {
  LemmaReport report;
  for (double q : q_list) {
    LemmaReport::MomentRow row;
    row.q = q;
    row.bounded = true;
    row.monotone_tail = true;
    std::vector<double> a_sorted(a_grid.begin(), a_grid.end());
    std::sort(a_sorted.begin(), a_sorted.end());
    double previous = std::numeric_limits<double>::infinity();
    for (double a : a_sorted) {
      const double value = scaled_gaussian_moment_tail(a, q);
      if (!std::isfinite(value)) row.bounded = false;
      row.sup_scaled = std::max(row.sup_scaled, value);
      if (a >= 2.0 * std::sqrt(q)) {
        if (value > previous * (1 + 1e-10)) row.monotone_tail = false;
        previous = value;
      }
    }
    report.moments.push_back(row);
  }
  std::vector<double> taus(tau_grid.begin(), tau_grid.end());
  std::sort(taus.begin(), taus.end());
  for (const auto& params : abc) {
    LemmaReport::SeriesRow row;
    row.a = params.a;
    row.b = params.b;
    row.c = params.c;
    double coarse = 0.0;
    for (double tau : taus) coarse = std::max(coarse, series_ratio(params.a, params.b, params.c, tau));
    double fine = coarse;
    for (std::size_t i = 0; i + 1 < taus.size(); ++i) {
      for (int j = 1; j < 8; ++j) {
        const double tau = taus[i] + (taus[i + 1] - taus[i]) * j / 8.0;
        fine = std::max(fine, series_ratio(params.a, params.b, params.c, tau));
      }
    }
    row.C = coarse;
    row.finite = std::isfinite(coarse);
    row.stable = std::abs(fine - coarse) <= 1e-9 * coarse;
    report.series.push_back(row);
  }
  return report;
}

nlohmann::json to_json(const LemmaReport& report) {
  nlohmann::json out;
  out["passed"] = report.passed();
  for (const auto& row : report.moments) {
    out["moments"].push_back({{"q", row.q},
                              {"sup_scaled", row.sup_scaled},
                              {"bounded", row.bounded},
                              {"monotone_tail", row.monotone_tail}});
  }
  for (const auto& row : report.series) {
    out["series"].push_back({{"a", row.a},
                             {"b", row.b},
                             {"c", row.c},
                             {"C", row.C},
                             {"finite", row.finite},
                             {"stable", row.stable}});
  }
  return out;
}

}  // namespace besovreg
