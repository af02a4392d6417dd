#include "besovreg/polybasis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <tuple>

#include "besovreg/error.hpp"
#include "besovreg/quadrature.hpp"

namespace besovreg {

std::size_t dim_poly(int r, int d) {
  if (r < 1 || d < 1) throw PreconditionError("dim_poly: requires r >= 1 and d >= 1");
  // binom(d + r - 1, d) = prod_{i=1..d} (r - 1 + i) / i, exact at every step
  unsigned __int128 value = 1;
  for (int i = 1; i <= d; ++i) {
    value = value * static_cast<unsigned>(r - 1 + i) / static_cast<unsigned>(i);
    if (value > std::numeric_limits<std::uint32_t>::max()) {
      throw CapacityError("dim_poly: dimension of P_r overflows for r=" + std::to_string(r) +
                          ", d=" + std::to_string(d));
    }
  }
  return static_cast<std::size_t>(value);
}

namespace {

void enumerate_degree(int d, int remaining, int axis, std::vector<int>& current,
                      std::vector<int>& out) {
  if (axis == d - 1) {
    current[axis] = remaining;
    out.insert(out.end(), current.begin(), current.end());
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    current[axis] = e;
    enumerate_degree(d, remaining - e, axis + 1, current, out);
  }
}

}  // namespace

PolySpace::PolySpace(int r, int d) : r_(r), d_(d) {
  const std::size_t rho = dim_poly(r, d);
  exponents_.reserve(rho * d);
  std::vector<int> current(d, 0);
  for (int degree = 0; degree < r; ++degree) enumerate_degree(d, degree, 0, current, exponents_);
}

void shifted_legendre(double u, int count, std::span<double> out) noexcept {
  const double x = 2.0 * u - 1.0;
  double p0 = 1.0;
  double p1 = x;
  for (int k = 0; k < count; ++k) {
    double pk;
    if (k == 0) {
      pk = 1.0;
    } else if (k == 1) {
      pk = x;
    } else {
      pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    out[k] = std::sqrt(2.0 * k + 1.0) * pk;
  }
}

void PolySpace::reference_values(std::span<const double> u, std::span<double> out) const {
  std::vector<double> axis(static_cast<std::size_t>(d_) * r_);
  for (int j = 0; j < d_; ++j) shifted_legendre(u[j], r_, std::span(axis).subspan(j * r_, r_));
  const std::size_t n = rho();
  for (std::size_t i = 0; i < n; ++i) {
    double v = 1.0;
    const auto e = exponent(i);
    for (int j = 0; j < d_; ++j) v *= axis[j * r_ + e[j]];
    out[i] = v;
  }
}

std::size_t DiscreteMeasure::site_count() const noexcept {
  std::size_t count = 1;
  for (int j = 0; j < cube.dim(); ++j) count *= static_cast<std::size_t>(sites_per_axis);
  return count;
}

OrthonormalLocalBasis::OrthonormalLocalBasis(int r, int d, int sites_per_axis)
    : space_(r, d), n_sites_(sites_per_axis) {
  const std::size_t rho = space_.rho();
  if (sites_per_axis < 1) throw PreconditionError("orthonormalize: N must be >= 1");
  const double sites = std::pow(static_cast<double>(sites_per_axis), d);
  if (sites < static_cast<double>(rho)) {
    throw PreconditionError("orthonormalize: requires N^d >= rho (N=" +
                            std::to_string(sites_per_axis) + ", d=" + std::to_string(d) +
                            ", rho=" + std::to_string(rho) + ")");
  }
  axis_table_.resize(static_cast<std::size_t>(sites_per_axis) * r);
  for (int a = 0; a < sites_per_axis; ++a) {
    shifted_legendre(static_cast<double>(a) / sites_per_axis, r,
                     std::span(axis_table_).subspan(static_cast<std::size_t>(a) * r, r));
  }
  // 1D discrete Gram of the normalized Legendre family; the tensor Gram
  // factorizes over axes.
  Eigen::MatrixXd gram1(r, r);
  for (int a = 0; a < r; ++a) {
    for (int b = 0; b < r; ++b) {
      double sum = 0.0;
      for (int s = 0; s < sites_per_axis; ++s) {
        sum += axis_table_[s * r + a] * axis_table_[s * r + b];
      }
      gram1(a, b) = sum / sites_per_axis;
    }
  }
  Eigen::MatrixXd gram(rho, rho);
  for (std::size_t i = 0; i < rho; ++i) {
    for (std::size_t j = 0; j < rho; ++j) {
      double v = 1.0;
      for (int axis = 0; axis < d; ++axis) {
        v *= gram1(space_.exponent(i)[axis], space_.exponent(j)[axis]);
      }
      gram(i, j) = v;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  min_eigenvalue_ = eig.eigenvalues().minCoeff();
  if (!(min_eigenvalue_ >= kRankTolerance)) {
    throw RankDeficiencyError("orthonormalize: Gram matrix smallest eigenvalue " +
                              std::to_string(min_eigenvalue_) + " < 1e-12 (r=" +
                              std::to_string(r) + ", d=" + std::to_string(d) +
                              ", N=" + std::to_string(sites_per_axis) + ")");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  const Eigen::MatrixXd lower = llt.matrixL();
  transform_ = lower.triangularView<Eigen::Lower>().solve(
      Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(rho), static_cast<Eigen::Index>(rho)));
}

std::size_t OrthonormalLocalBasis::site_count() const noexcept {
  std::size_t count = 1;
  for (int j = 0; j < space_.dim(); ++j) count *= static_cast<std::size_t>(n_sites_);
  return count;
}

void OrthonormalLocalBasis::evaluate(std::span<const double> u, std::span<double> out) const {
  const std::size_t rho = space_.rho();
  Eigen::VectorXd phi(rho);
  space_.reference_values(u, std::span(phi.data(), rho));
  const Eigen::VectorXd q = transform_.triangularView<Eigen::Lower>() * phi;
  for (std::size_t j = 0; j < rho; ++j) out[j] = q[j];
}

double OrthonormalLocalBasis::evaluate_combination(std::span<const double> coeffs,
                                                   std::span<const double> u) const {
  const std::size_t rho = space_.rho();
  double stack[64];
  std::vector<double> heap;
  std::span<double> values;
  if (rho <= 64) {
    values = std::span(stack, rho);
  } else {
    heap.resize(rho);
    values = heap;
  }
  evaluate(u, values);
  double sum = 0.0;
  for (std::size_t j = 0; j < rho; ++j) sum += coeffs[j] * values[j];
  return sum;
}

Eigen::VectorXd OrthonormalLocalBasis::to_reference(std::span<const double> coeffs) const {
  const auto c = Eigen::Map<const Eigen::VectorXd>(coeffs.data(),
                                                   static_cast<Eigen::Index>(coeffs.size()));
  return transform_.transpose() * c;
}

void OrthonormalLocalBasis::site(std::size_t i, std::span<double> u) const noexcept {
  const int d = space_.dim();
  for (int j = d - 1; j >= 0; --j) {
    u[j] = static_cast<double>(i % n_sites_) / n_sites_;
    i /= n_sites_;
  }
}

std::vector<double> OrthonormalLocalBasis::project(std::span<const double> values) const {
  const std::size_t count = site_count();
  if (values.size() != count) {
    throw PreconditionError("project_ls: expected " + std::to_string(count) + " values, got " +
                            std::to_string(values.size()));
  }
  const int d = space_.dim();
  const int r = space_.order();
  const std::size_t rho = space_.rho();
  Eigen::VectorXd moments = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rho));
  std::vector<int> counter(d, 0);
  for (std::size_t i = 0; i < count; ++i) {
    const double y = values[i];
    if (y != 0.0) {
      for (std::size_t a = 0; a < rho; ++a) {
        const auto e = space_.exponent(a);
        double phi = y;
        for (int j = 0; j < d; ++j) phi *= axis_table_[counter[j] * r + e[j]];
        moments[static_cast<Eigen::Index>(a)] += phi;
      }
    }
    for (int j = d - 1; j >= 0; --j) {
      if (++counter[j] < n_sites_) break;
      counter[j] = 0;
    }
  }
  moments /= static_cast<double>(count);
  const Eigen::VectorXd coeffs = transform_.triangularView<Eigen::Lower>() * moments;
  return {coeffs.data(), coeffs.data() + coeffs.size()};
}

Eigen::MatrixXd OrthonormalLocalBasis::reference_site_matrix() const {
  const std::size_t count = site_count();
  const std::size_t rho = space_.rho();
  Eigen::MatrixXd v(count, rho);
  std::vector<double> u(space_.dim());
  std::vector<double> phi(rho);
  for (std::size_t i = 0; i < count; ++i) {
    site(i, u);
    space_.reference_values(u, phi);
    for (std::size_t j = 0; j < rho; ++j) v(i, j) = phi[j];
  }
  return v;
}

std::shared_ptr<const OrthonormalLocalBasis> orthonormal_basis(int r, int d, int sites_per_axis) {
  if (sites_per_axis >= 1 &&
      !(std::pow(static_cast<double>(sites_per_axis), d) > static_cast<double>(dim_poly(r, d)))) {
    throw PreconditionError("orthonormalize: requires N^d > rho (N=" +
                            std::to_string(sites_per_axis) + ", d=" + std::to_string(d) +
                            ", rho=" + std::to_string(dim_poly(r, d)) + ")");
  }
  static std::mutex mutex;
  static std::map<std::tuple<int, int, int>, std::shared_ptr<const OrthonormalLocalBasis>> cache;
  const auto key = std::make_tuple(r, d, sites_per_axis);
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  // Built outside the lock; if two threads race, the first insertion wins.
  auto basis = std::make_shared<const OrthonormalLocalBasis>(r, d, sites_per_axis);
  std::lock_guard lock(mutex);
  return cache.try_emplace(key, std::move(basis)).first->second;
}

std::shared_ptr<const OrthonormalLocalBasis> orthonormalize(const PolySpace& space,
                                                            const DiscreteMeasure& measure) {
  if (measure.cube.dim() != space.dim()) {
    throw PreconditionError("orthonormalize: cube dimension does not match the polynomial space");
  }
  return orthonormal_basis(space.order(), space.dim(), measure.sites_per_axis);
}

double LocalPolynomial::operator()(std::span<const double> x) const {
  std::vector<double> u(x.size());
  cube.to_local(x, u);
  return basis->evaluate_combination(coeffs, u);
}

double LocalPolynomial::at_local(std::span<const double> u) const {
  return basis->evaluate_combination(coeffs, u);
}

LocalPolynomial project_ls(std::span<const double> values, const DyadicCube& cube,
                           std::shared_ptr<const OrthonormalLocalBasis> basis) {
  auto coeffs = basis->project(values);
  return LocalPolynomial{cube, std::move(coeffs), std::move(basis)};
}

int norm_star_dense_points(int d) noexcept {
  switch (d) {
    case 1: return 1025;
    case 2: return 129;
    case 3: return 33;
    default: return 9;
  }
}

double norm_star(const OrthonormalLocalBasis& basis, std::span<const double> coeffs, double q,
                 double q_floor) {
  if (!(q >= q_floor)) {
    throw PreconditionError("norm_star: exponent q=" + std::to_string(q) +
                            " is below the floor " + std::to_string(q_floor));
  }
  const int d = basis.space().dim();
  const Eigen::VectorXd ref = basis.to_reference(coeffs);
  const std::size_t rho = basis.rho();
  std::vector<double> phi(rho);
  auto value_at = [&](std::span<const double> u) {
    basis.space().reference_values(u, phi);
    double v = 0.0;
    for (std::size_t j = 0; j < rho; ++j) v += ref[static_cast<Eigen::Index>(j)] * phi[j];
    return v;
  };
  const std::vector<double> lo(d, 0.0);
  const std::vector<double> hi(d, 1.0);
  if (std::isinf(q)) {
    double best = 0.0;
    for_each_uniform_point(lo, hi, norm_star_dense_points(d),
                           [&](std::span<const double> u) { best = std::max(best, std::abs(value_at(u))); });
    return best;
  }
  double integral = 0.0;
  for_each_composite_node(lo, hi, 4, basis.space().order() + 2,
                          [&](std::span<const double> u, double w) {
                            integral += w * std::pow(std::abs(value_at(u)), q);
                          });
  return std::pow(integral, 1.0 / q);
}

double norm_star(const LocalPolynomial& poly, double q, double q_floor) {
  return norm_star(*poly.basis, poly.coeffs, q, q_floor);
}

}  // namespace besovreg

namespace besovreg {

double NormBrackets::worst() const noexcept {
  return std::max({continuous_discrete, continuous_coeffs, discrete_coeffs});
}

NormBrackets norm_equivalence_brackets(int r, int d, double q, int sites_per_axis,
                                       const std::vector<std::vector<double>>& samples) {
  const auto basis = orthonormal_basis(r, d, sites_per_axis);
  const std::size_t sites = basis->site_count();
  // Q_j at every site, site-major.
  std::vector<double> table(sites * basis->rho());
  std::vector<double> u(d);
  for (std::size_t i = 0; i < sites; ++i) {
    basis->site(i, u);
    basis->evaluate(u, std::span(table).subspan(i * basis->rho(), basis->rho()));
  }
  auto ratio = [](double a, double b) { return std::max(a / b, b / a); };
  NormBrackets out;
  for (const auto& beta : samples) {
    if (beta.size() != basis->rho()) {
      throw PreconditionError("norm_equivalence_brackets: sample length != rho");
    }
    const double continuous = norm_star(*basis, beta, q);
    double discrete = 0.0;
    for (std::size_t i = 0; i < sites; ++i) {
      double value = 0.0;
      for (std::size_t j = 0; j < beta.size(); ++j) value += beta[j] * table[i * beta.size() + j];
      discrete = std::isinf(q) ? std::max(discrete, std::abs(value))
                               : discrete + std::pow(std::abs(value), q);
    }
    if (!std::isinf(q)) discrete = std::pow(discrete / static_cast<double>(sites), 1.0 / q);
    double coeffs = 0.0;
    for (double b : beta) coeffs = std::isinf(q) ? std::max(coeffs, std::abs(b)) : coeffs + std::pow(std::abs(b), q);
    if (!std::isinf(q)) coeffs = std::pow(coeffs, 1.0 / q);
    out.continuous_discrete = std::max(out.continuous_discrete, ratio(continuous, discrete));
    out.continuous_coeffs = std::max(out.continuous_coeffs, ratio(continuous, coeffs));
    out.discrete_coeffs = std::max(out.discrete_coeffs, ratio(discrete, coeffs));
  }
  return out;
}

}  // namespace besovreg
