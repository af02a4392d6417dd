#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <sstream>
#include <vector>

#include "besovreg/analysis.hpp"
#include "besovreg/error.hpp"
#include "besovreg/multiscale.hpp"
#include "besovreg/oracles.hpp"
#include "besovreg/serialize.hpp"

using namespace besovreg;
using Catch::Approx;

namespace {

double max_gap(const PiecewisePoly& a, const PointFunction& b, int d) {
  return lq_distance([&](std::span<const double> x) { return eval_pwp(a, x); }, b, d, kInfinity,
                     QuadratureSpec{d == 1 ? 10 : 6, 0});
}

double max_gap(const PiecewisePoly& a, const PiecewisePoly& b) {
  return max_gap(a, [&](std::span<const double> x) { return eval_pwp(b, x); }, a.d);
}

}  // namespace

TEST_CASE("cubes_at_level: counts and lexicographic order", "[multiscale]") {
  const auto c03 = cubes_at_level(0, 3);
  REQUIRE(c03.size() == 1);
  CHECK(c03[0].side() == 1.0);
  const auto c11 = cubes_at_level(1, 1);
  REQUIRE(c11.size() == 2);
  CHECK(c11[0].corner(0) == 0.0);
  CHECK(c11[1].corner(0) == 0.5);
  const auto c22 = cubes_at_level(2, 2);
  REQUIRE(c22.size() == 16);
  for (std::size_t i = 0; i < c22.size(); ++i) {
    CHECK(c22[i].linear_index() == i);
    CHECK(cube_from_index(2, 2, i) == c22[i]);
  }
  CHECK(c22[1].idx == std::vector<std::int64_t>{0, 1});
  CHECK_THROWS_AS(cubes_at_level(14, 2, 1 << 20), CapacityError);
}

TEST_CASE("DyadicCube: parent contains child, half-open membership", "[multiscale]") {
  const DyadicCube c{3, {5, 2}};
  const DyadicCube p = c.parent();
  CHECK(p.level == 2);
  CHECK(p.idx == std::vector<std::int64_t>{2, 1});
  CHECK(c.child_position() == 0b10);
  const double inside[] = {5.0 / 8, 2.0 / 8};
  const double edge[] = {6.0 / 8, 2.0 / 8};
  CHECK(c.contains(inside));
  CHECK_FALSE(c.contains(edge));
  CHECK(p.contains(inside));
}

TEST_CASE("locate: half-open convention with closure at 1", "[multiscale]") {
  const double a[] = {0.49}, b[] = {0.5}, c[] = {1.0}, bad[] = {1.01}, neg[] = {-0.1};
  CHECK(locate(a, 1).idx[0] == 0);
  CHECK(locate(b, 1).idx[0] == 1);
  CHECK(locate(c, 1).idx[0] == 1);
  CHECK(locate_index(c, 3) == 7);
  CHECK_THROWS_AS(locate(bad, 1), DomainError);
  CHECK_THROWS_AS(locate(neg, 2), DomainError);
  const double x2[] = {0.3, 0.9};
  CHECK(locate_index(x2, 2) == 1 * 4 + 3);
}

TEST_CASE("project_level: exact on polynomials and on coarser piecewise polynomials", "[multiscale]") {
  for (int d = 1; d <= 2; ++d) {
    const int n = d == 1 ? 8 : 5;
    const FunctionOracle poly = make_target({"poly", {{"r", 3}, {"seed", 4}}}, d);
    const ObservationSet obs = observe(poly, build_grid(n, d), 0.0, NoiseKind::gaussian, 1);
    for (int k = 0; k <= n - 3; ++k) {
      CHECK(max_gap(project_level(obs, k, 3), poly.evaluator, d) <= 1e-10);
    }
    const FunctionOracle pw = make_target({"piecewise", {{"k", 2}, {"r", 3}, {"seed", 9}}}, d);
    const ObservationSet obs2 = observe(pw, build_grid(n, d), 0.0, NoiseKind::gaussian, 1);
    for (int k = 2; k <= n - 3; ++k) {
      CHECK(max_gap(project_level(obs2, k, 3), pw.evaluator, d) <= 1e-10);
    }
    CHECK_THROWS_AS(project_level(obs, n - 2, 3), LevelTooDeepError);
  }
}

TEST_CASE("project_level: cusp approximation rate in k", "[multiscale]") {
  // ||f - S_k f||_{L_2} ~ 2^(-k s) with s = 2 for the cusp target
  const FunctionOracle f = make_target({"cusp", {}}, 1);
  const ObservationSet obs = observe(f, build_grid(12, 1), 0.0, NoiseKind::gaussian, 1);
  std::vector<std::pair<double, double>> pairs;
  for (int k = 1; k <= 6; ++k) {
    const PiecewisePoly s = project_level(obs, k, 3);
    pairs.emplace_back(std::ldexp(1.0, k), lq_distance(f, s, 2.0, QuadratureSpec{10, 5}));
  }
  CHECK(rate_fit(pairs).slope == Approx(-2.0).margin(0.25));
}

TEST_CASE("decompose: polynomial data has no detail coefficients", "[multiscale]") {
  const FunctionOracle poly = make_target({"poly", {{"r", 2}, {"seed", 2}}}, 2);
  const ObservationSet obs = observe(poly, build_grid(5, 2), 0.0, NoiseKind::gaussian, 1);
  const MultiscaleDecomposition dec = decompose(obs, 2);
  REQUIRE(dec.max_level() == 3);
  double nu0 = 0.0;
  for (double v : dec.levels[0].entries) nu0 = std::max(nu0, std::abs(v));
  CHECK(nu0 > 0.1);
  for (int k = 1; k <= dec.max_level(); ++k) {
    CHECK(dec.levels[k].size() == dec.levels[k].rho << (k * 2));
    for (double v : dec.levels[k].entries) CHECK(std::abs(v) <= 1e-11);
  }
  CHECK_THROWS_AS(decompose(observe(poly, build_grid(2, 2), 0.0, NoiseKind::gaussian, 1), 2),
                  PreconditionError);
}

TEST_CASE("decompose: level norms of the cusp decay like 2^(-k (s - d/p))", "[multiscale]") {
  const FunctionOracle f = make_target({"cusp", {}}, 1);
  const ObservationSet obs = observe(f, build_grid(12, 1), 0.0, NoiseKind::gaussian, 1);
  const MultiscaleDecomposition dec = decompose(obs, 3);
  std::vector<std::pair<double, double>> pairs;
  for (int k = 2; k <= 9; ++k) {
    double sq = 0.0;
    for (double v : dec.levels[k].entries) sq += v * v;
    pairs.emplace_back(std::ldexp(1.0, k), std::sqrt(sq));
  }
  CHECK(rate_fit(pairs).slope == Approx(-1.5).margin(0.3));
}

TEST_CASE("decompose: pure-noise coefficient variance scales like 2^(-(n-k) d)", "[multiscale][statistics]") {
  const int n = 6, r = 2, trials = 10000;
  const FunctionOracle zero = make_target({"zero", {}}, 1);
  const SampleGrid grid = build_grid(n, 1);
  std::vector<std::vector<double>> sum(n - r + 1), sq(n - r + 1);
  for (int t = 0; t < trials; ++t) {
    const MultiscaleDecomposition dec = decompose(observe(zero, grid, 1.0, NoiseKind::gaussian, 1000 + t), r);
    for (int k = 0; k <= n - r; ++k) {
      auto& s = sum[k];
      auto& q = sq[k];
      s.resize(dec.levels[k].size());
      q.resize(dec.levels[k].size());
      for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] += dec.levels[k].entries[i];
        q[i] += dec.levels[k].entries[i] * dec.levels[k].entries[i];
      }
    }
  }
  std::vector<double> constants;
  for (int k = 0; k <= n - r; ++k) {
    double worst_var = 0.0;
    for (std::size_t i = 0; i < sum[k].size(); ++i) {
      const double mean = sum[k][i] / trials;
      const double var = sq[k][i] / trials - mean * mean;
      worst_var = std::max(worst_var, var);
      CHECK(std::abs(mean) < 5.0 * std::sqrt(var / trials));
    }
    constants.push_back(worst_var * std::ldexp(1.0, n - k));
  }
  // level 0 carries the plain least-squares coefficients: variance sigma^2 / N^d
  CHECK(constants[0] == Approx(1.0).epsilon(0.05));
  for (double c : constants) CHECK(c < 3.0);
}

TEST_CASE("reconstruct: telescoping sum recovers every projection", "[multiscale]") {
  const FunctionOracle f = make_target({"cusp", {}}, 1);
  const ObservationSet obs = observe(f, build_grid(9, 1), 0.3, NoiseKind::gaussian, 17);
  const MultiscaleDecomposition dec = decompose(obs, 3);
  for (int k = 0; k <= dec.max_level(); ++k) {
    CHECK(max_gap(reconstruct(dec, k), project_level(obs, k, 3)) <= 1e-10);
  }
  CHECK_THROWS_AS(reconstruct(dec, dec.max_level() + 1), PreconditionError);
}

TEST_CASE("reconstruct: identity on S_k(r) and zero details give S_0", "[multiscale]") {
  for (int d = 1; d <= 2; ++d) {
    const int n = d == 1 ? 7 : 5;
    const FunctionOracle pw = make_target({"piecewise", {{"k", 2}, {"r", 2}, {"seed", 5}}}, d);
    const ObservationSet obs = observe(pw, build_grid(n, d), 0.0, NoiseKind::gaussian, 1);
    MultiscaleDecomposition dec = decompose(obs, 2);
    CHECK(max_gap(reconstruct(dec, dec.max_level()), pw.evaluator, d) <= 1e-10);
    for (int k = 3; k <= dec.max_level(); ++k) {
      for (double v : dec.levels[k].entries) CHECK(std::abs(v) <= 1e-11);
    }
    for (int k = 1; k <= dec.max_level(); ++k) {
      std::fill(dec.levels[k].entries.begin(), dec.levels[k].entries.end(), 0.0);
    }
    CHECK(max_gap(reconstruct(dec, dec.max_level()), project_level(obs, 0, 2)) <= 1e-11);
  }
}

TEST_CASE("decompose: linear in the data", "[multiscale]") {
  const SampleGrid grid = build_grid(6, 2);
  const FunctionOracle zero = make_target({"zero", {}}, 2);
  const ObservationSet a = observe(zero, grid, 1.0, NoiseKind::gaussian, 3);
  const ObservationSet b = observe(zero, grid, 1.0, NoiseKind::gaussian, 4);
  std::vector<double> combo(a.size());
  for (std::size_t i = 0; i < combo.size(); ++i) combo[i] = 2.0 * a.values[i] - 0.5 * b.values[i];
  const auto da = decompose(a, 2), db = decompose(b, 2);
  const auto dc = decompose(observations_from_values(grid, combo, 0.0), 2);
  for (int k = 0; k <= dc.max_level(); ++k) {
    for (std::size_t i = 0; i < dc.levels[k].size(); ++i) {
      const double expect = 2.0 * da.levels[k].entries[i] - 0.5 * db.levels[k].entries[i];
      CHECK(dc.levels[k].entries[i] == Approx(expect).margin(1e-12));
    }
  }
}

TEST_CASE("decompose: thread count does not change the coefficients", "[multiscale]") {
  const FunctionOracle f = make_target({"bump", {}}, 2);
  const ObservationSet obs = observe(f, build_grid(6, 2), 0.1, NoiseKind::gaussian, 8);
  const auto one = decompose(obs, 2, 1), four = decompose(obs, 2, 4);
  for (int k = 0; k <= one.max_level(); ++k) CHECK(one.levels[k].entries == four.levels[k].entries);
}

TEST_CASE("refinement_matrix: reproduces parent polynomials on children", "[multiscale]") {
  for (int d = 1; d <= 2; ++d) {
    const int r = 3, child_sites = 4;
    const auto parent = orthonormal_basis(r, d, 2 * child_sites);
    const auto child = orthonormal_basis(r, d, child_sites);
    Eigen::VectorXd c = Eigen::VectorXd::LinSpaced(parent->rho(), -1.0, 2.0);
    for (std::size_t pos = 0; pos < (std::size_t{1} << d); ++pos) {
      const Eigen::VectorXd cc = refinement_matrix(r, d, child_sites, pos) * c;
      double worst = 0.0;
      for (int t = 0; t < 25; ++t) {
        std::vector<double> u(d), x(d);
        for (int j = 0; j < d; ++j) {
          u[j] = (t * 0.37 + j * 0.11) - std::floor(t * 0.37 + j * 0.11);
          const int bit = static_cast<int>((pos >> (d - 1 - j)) & 1);
          x[j] = 0.5 * (bit + u[j]);
        }
        worst = std::max(worst, std::abs(child->evaluate_combination(std::span<const double>(cc.data(), cc.size()), u) -
                                         parent->evaluate_combination(std::span<const double>(c.data(), c.size()), x)));
      }
      CHECK(worst <= 1e-12);
    }
  }
}

TEST_CASE("piecewise_from_coefficients: L_q norm tracks the weighted coefficient norm", "[multiscale]") {
  // ||T(nu)||_{L_2} / ||nu||*_2 should stay within fixed bounds as k grows
  std::vector<double> ratios;
  for (int k = 1; k <= 5; ++k) {
    CoefficientVector nu{k, 1, 2, 2, {}};
    nu.entries.resize(nu.rho << k);
    for (std::size_t i = 0; i < nu.size(); ++i) nu.entries[i] = std::sin(1.7 * i + 0.3 * k);
    const PiecewisePoly t = piecewise_from_coefficients(nu, 8);
    double sq = 0.0;
    for (double v : nu.entries) sq += v * v;
    const double coeff = std::sqrt(sq / nu.size());
    const double lq = lq_norm([&](std::span<const double> x) { return eval_pwp(t, x); }, 1, 2.0,
                              QuadratureSpec{k + 2, 4});
    ratios.push_back(lq / coeff);
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  CHECK(*hi / *lo < 1.2);
  CHECK(*lo > 0.5);
}

TEST_CASE("eval_pwp: closure at 1 and domain errors", "[multiscale]") {
  const FunctionOracle pw = make_target({"piecewise", {{"k", 2}, {"r", 1}, {"seed", 1}}}, 1);
  const ObservationSet obs = observe(pw, build_grid(4, 1), 0.0, NoiseKind::gaussian, 1);
  const PiecewisePoly s = project_level(obs, 2, 1);
  const double one[] = {1.0}, last[] = {0.9}, out[] = {1.5};
  CHECK(eval_pwp(s, one) == Approx(eval_pwp(s, last)).margin(1e-14));
  CHECK_THROWS_AS(eval_pwp(s, out), DomainError);
}

TEST_CASE("serialize: binary round trip and header layout", "[multiscale][io]") {
  const FunctionOracle f = make_target({"cusp", {}}, 2);
  const ObservationSet obs = observe(f, build_grid(5, 2), 0.2, NoiseKind::gaussian, 2);
  const MultiscaleDecomposition dec = decompose(obs, 2);
  const CoefficientVector& nu = dec.levels[2];
  std::stringstream buf;
  write_binary(buf, nu);
  const std::string bytes = buf.str();
  REQUIRE(bytes.size() == 4 * 8 + nu.size() * 8);
  std::int64_t header[4];
  std::memcpy(header, bytes.data(), sizeof header);
  CHECK(header[0] == 2);
  CHECK(header[1] == 2);
  CHECK(header[2] == 2);
  CHECK(header[3] == static_cast<std::int64_t>(nu.rho));
  const CoefficientVector back = read_coefficients_binary(buf);
  CHECK(back.entries == nu.entries);
  CHECK(back.rho == nu.rho);

  const PiecewisePoly s = reconstruct(dec, 3);
  std::stringstream buf2;
  write_binary(buf2, s);
  const PiecewisePoly s2 = read_piecewise_binary(buf2);
  CHECK(s2.coeffs == s.coeffs);
  CHECK(max_gap(s, s2) == 0.0);
  const auto j = to_json(s);
  CHECK(j.at("k") == 3);
  CHECK(piecewise_from_json(j).coeffs == s.coeffs);
  CHECK(coefficients_from_json(to_json(nu)).entries == nu.entries);

  std::stringstream truncated(bytes.substr(0, 20));
  CHECK_THROWS(read_coefficients_binary(truncated));
}
