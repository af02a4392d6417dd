#include "besovreg/multiscale.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <tuple>

#include "besovreg/error.hpp"
#include "besovreg/parallel.hpp"

namespace besovreg {

std::vector<DyadicCube> cubes_at_level(int k, int d, std::size_t max_cubes) {
  if (k < 0 || d < 1) throw PreconditionError("cubes_at_level: requires k >= 0 and d >= 1");
  const long long bits = static_cast<long long>(k) * d;
  if (bits >= 63 || (std::size_t{1} << bits) > max_cubes) {
    throw CapacityError("cubes_at_level: 2^" + std::to_string(bits) +
                        " cubes exceeds the configured limit");
  }
  const std::size_t count = std::size_t{1} << bits;
  std::vector<DyadicCube> cubes;
  cubes.reserve(count);
  for (std::size_t i = 0; i < count; ++i) cubes.push_back(cube_from_index(k, d, i));
  return cubes;
}

namespace {

std::int64_t axis_index(double x, int k) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw DomainError("locate: coordinate " + std::to_string(x) + " outside [0, 1]");
  }
  const std::int64_t last = (std::int64_t{1} << k) - 1;
  const auto i = static_cast<std::int64_t>(std::floor(std::ldexp(x, k)));
  return std::min(i, last);
}

}  // namespace

DyadicCube locate(std::span<const double> x, int k) {
  DyadicCube cube{k, std::vector<std::int64_t>(x.size())};
  for (std::size_t j = 0; j < x.size(); ++j) cube.idx[j] = axis_index(x[j], k);
  return cube;
}

std::size_t locate_index(std::span<const double> x, int k) {
  std::size_t linear = 0;
  for (double xj : x) linear = (linear << k) | static_cast<std::size_t>(axis_index(xj, k));
  return linear;
}

LocalPolynomial PiecewisePoly::cell(std::size_t index) const {
  const auto c = cell_coeffs(index);
  return LocalPolynomial{cube_from_index(level, d, index), {c.begin(), c.end()}, basis};
}

double eval_pwp(const PiecewisePoly& s, std::span<const double> x) {
  if (static_cast<int>(x.size()) != s.d) throw DomainError("eval_pwp: dimension mismatch");
  const std::size_t index = locate_index(x, s.level);
  double u[16];
  std::vector<double> heap;
  std::span<double> local;
  if (s.d <= 16) {
    local = std::span(u, s.d);
  } else {
    heap.resize(s.d);
    local = heap;
  }
  std::size_t rest = index;
  const std::size_t mask = (std::size_t{1} << s.level) - 1;
  for (int j = s.d - 1; j >= 0; --j) {
    local[j] = std::ldexp(x[j], s.level) - static_cast<double>(rest & mask);
    rest >>= s.level;
  }
  return s.basis->evaluate_combination(s.cell_coeffs(index), local);
}

double PiecewisePoly::operator()(std::span<const double> x) const { return eval_pwp(*this, x); }

PiecewisePoly zero_piecewise(int level, int d, int r, int sites_per_axis) {
  PiecewisePoly s{level, d, r, orthonormal_basis(r, d, sites_per_axis), {}};
  s.coeffs.assign(s.cell_count() * s.rho(), 0.0);
  return s;
}

std::vector<double> gather_cube_values(const ObservationSet& obs, const DyadicCube& cube) {
  const SampleGrid& grid = obs.grid;
  const int d = grid.dim();
  const int shift = grid.level() - cube.level;
  if (shift < 0) throw PreconditionError("gather_cube_values: cube finer than the grid");
  const std::size_t per_axis = std::size_t{1} << shift;
  std::size_t count = 1;
  for (int j = 0; j < d; ++j) count *= per_axis;
  std::vector<double> values(count);
  std::vector<std::size_t> counter(d, 0);
  std::vector<std::size_t> axis(d);
  for (std::size_t i = 0; i < count; ++i) {
    for (int j = 0; j < d; ++j) {
      axis[j] = static_cast<std::size_t>(cube.idx[j]) * per_axis + counter[j];
    }
    values[i] = obs.values[grid.linear_index(axis)];
    for (int j = d - 1; j >= 0; --j) {
      if (++counter[j] < per_axis) break;
      counter[j] = 0;
    }
  }
  return values;
}

namespace {

void check_level(const ObservationSet& obs, int k, int r) {
  if (k < 0) throw PreconditionError("project_level: level must be >= 0");
  if (k > obs.grid.level() - r) {
    throw LevelTooDeepError("project_level: level " + std::to_string(k) + " exceeds n - r = " +
                            std::to_string(obs.grid.level() - r));
  }
}

}  // namespace

PiecewisePoly project_level(const ObservationSet& obs, int k, int r, unsigned threads) {
  check_level(obs, k, r);
  const int d = obs.grid.dim();
  PiecewisePoly s = zero_piecewise(k, d, r, 1 << (obs.grid.level() - k));
  const std::size_t rho = s.rho();
  parallel_for(s.cell_count(), threads, [&](std::size_t i) {
    const auto values = gather_cube_values(obs, cube_from_index(k, d, i));
    const auto coeffs = s.basis->project(values);
    std::copy(coeffs.begin(), coeffs.end(), s.coeffs.begin() + static_cast<std::ptrdiff_t>(i * rho));
  });
  return s;
}

namespace {

Eigen::MatrixXd build_refinement(int r, int d, int child_n, std::size_t position) {
  const auto child = orthonormal_basis(r, d, child_n);
  const auto parent = orthonormal_basis(r, d, 2 * child_n);
  const PolySpace& space = child->space();
  const std::size_t rho = space.rho();
  // k1[c][a][b] = (1/N) sum_i L_a(i/N) L_b((c + i/N) / 2): child reference
  // basis against parent reference basis at the child's sites, per axis.
  std::vector<double> k1(2 * static_cast<std::size_t>(r) * r, 0.0);
  std::vector<double> child_vals(r);
  std::vector<double> parent_vals(r);
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < child_n; ++i) {
      const double u = static_cast<double>(i) / child_n;
      shifted_legendre(u, r, child_vals);
      shifted_legendre(0.5 * (c + u), r, parent_vals);
      for (int a = 0; a < r; ++a) {
        for (int b = 0; b < r; ++b) k1[(c * r + a) * r + b] += child_vals[a] * parent_vals[b];
      }
    }
  }
  for (auto& v : k1) v /= child_n;
  Eigen::MatrixXd k(rho, rho);
  for (std::size_t a = 0; a < rho; ++a) {
    for (std::size_t b = 0; b < rho; ++b) {
      double v = 1.0;
      for (int j = 0; j < d; ++j) {
        const int c = static_cast<int>((position >> (d - 1 - j)) & 1);
        v *= k1[(c * r + space.exponent(a)[j]) * r + space.exponent(b)[j]];
      }
      k(a, b) = v;
    }
  }
  return child->transform() * k * parent->transform().transpose();
}

}  // namespace

const Eigen::MatrixXd& refinement_matrix(int r, int d, int child_sites_per_axis,
                                         std::size_t child_position) {
  static std::mutex mutex;
  static std::map<std::tuple<int, int, int, std::size_t>, std::unique_ptr<Eigen::MatrixXd>> cache;
  const auto key = std::make_tuple(r, d, child_sites_per_axis, child_position);
  std::lock_guard lock(mutex);
  auto& slot = cache[key];
  if (!slot) {
    slot = std::make_unique<Eigen::MatrixXd>(
        build_refinement(r, d, child_sites_per_axis, child_position));
  }
  return *slot;
}

namespace {

// child coefficients of the parent polynomial, for every cube of `level`.
void add_parent_contribution(const std::vector<double>& parent, int level, int d, int r,
                             int child_n, std::size_t rho, std::vector<double>& out, double sign) {
  const std::size_t count = std::size_t{1} << (level * d);
  std::vector<const Eigen::MatrixXd*> matrices(std::size_t{1} << d);
  for (std::size_t c = 0; c < matrices.size(); ++c) {
    matrices[c] = &refinement_matrix(r, d, child_n, c);
  }
  for (std::size_t i = 0; i < count; ++i) {
    const DyadicCube cube = cube_from_index(level, d, i);
    const std::size_t parent_index = cube.parent().linear_index();
    const auto p = Eigen::Map<const Eigen::VectorXd>(parent.data() + parent_index * rho,
                                                     static_cast<Eigen::Index>(rho));
    auto o = Eigen::Map<Eigen::VectorXd>(out.data() + i * rho, static_cast<Eigen::Index>(rho));
    o.noalias() += sign * (*matrices[cube.child_position()] * p);
  }
}

}  // namespace

MultiscaleDecomposition decompose(const ObservationSet& obs, int r, unsigned threads) {
  const int n = obs.grid.level();
  const int d = obs.grid.dim();
  if (n < r + 1) {
    throw PreconditionError("decompose: requires n >= r + 1 (n=" + std::to_string(n) +
                            ", r=" + std::to_string(r) + ")");
  }
  MultiscaleDecomposition result{n, d, r, {}};
  const int k_max = n - r;
  std::vector<double> previous;
  for (int k = 0; k <= k_max; ++k) {
    PiecewisePoly s = project_level(obs, k, r, threads);
    CoefficientVector nu{k, d, r, s.rho(), s.coeffs};
    if (k > 0) {
      add_parent_contribution(previous, k, d, r, 1 << (n - k), s.rho(), nu.entries, -1.0);
    }
    previous = std::move(s.coeffs);
    result.levels.push_back(std::move(nu));
  }
  return result;
}

PiecewisePoly reconstruct(const MultiscaleDecomposition& decomposition, int up_to_level) {
  if (up_to_level < 0 || up_to_level > decomposition.max_level()) {
    throw PreconditionError("reconstruct: level " + std::to_string(up_to_level) +
                            " outside the decomposition range");
  }
  const int d = decomposition.d;
  const int r = decomposition.r;
  std::vector<double> current = decomposition.levels[0].entries;
  for (int k = 1; k <= up_to_level; ++k) {
    const CoefficientVector& nu = decomposition.levels[k];
    std::vector<double> next = nu.entries;
    add_parent_contribution(current, k, d, r, decomposition.sites_per_axis(k), nu.rho, next, 1.0);
    current = std::move(next);
  }
  PiecewisePoly s{up_to_level, d, r,
                  orthonormal_basis(r, d, decomposition.sites_per_axis(up_to_level)),
                  std::move(current)};
  return s;
}

PiecewisePoly piecewise_from_coefficients(const CoefficientVector& nu, int sites_per_axis) {
  PiecewisePoly s{nu.level, nu.d, nu.r, orthonormal_basis(nu.r, nu.d, sites_per_axis), nu.entries};
  if (s.coeffs.size() != s.cell_count() * s.rho()) {
    throw PreconditionError("piecewise_from_coefficients: entry count does not match rho 2^(kd)");
  }
  return s;
}

}  // namespace besovreg
