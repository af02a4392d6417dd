#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "besovreg/error.hpp"
#include "besovreg/grid.hpp"

using namespace besovreg;
using Catch::Approx;

namespace {

FunctionOracle constant_oracle(double c) {
  return {[c](std::span<const double>) { return c; }, "constant", {}};
}

FunctionOracle sum_oracle() {
  return {[](std::span<const double> x) {
            double s = 0.0;
            for (double v : x) s += v * v + 0.25 * v;
            return s;
          },
          "sum", {}};
}

}  // namespace

TEST_CASE("build_grid: small grids enumerate the lower-left corners", "[grid]") {
  const SampleGrid g11 = build_grid(1, 1);
  REQUIRE(g11.size() == 2);
  CHECK(g11.point(0)[0] == 0.0);
  CHECK(g11.point(1)[0] == 0.5);

  const SampleGrid g12 = build_grid(1, 2);
  REQUIRE(g12.size() == 4);
  const std::vector<std::pair<double, double>> expected{{0, 0}, {0, .5}, {.5, 0}, {.5, .5}};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(g12.point(i)[0] == expected[i].first);
    CHECK(g12.point(i)[1] == expected[i].second);
  }

  const SampleGrid g31 = build_grid(3, 1);
  CHECK(g31.size() == 8);
  const auto pts = g31.flat_points();
  CHECK(*std::max_element(pts.begin(), pts.end()) == 0.875);
}

TEST_CASE("build_grid: capacity and precondition errors", "[grid]") {
  CHECK_THROWS_AS(build_grid(27, 1), CapacityError);
  CHECK_THROWS_AS(build_grid(9, 3), CapacityError);
  CHECK_NOTHROW(build_grid(4, 2, 256));
  CHECK_THROWS_AS(build_grid(4, 2, 255), CapacityError);
  CHECK_THROWS_AS(build_grid(0, 1), PreconditionError);
  CHECK_THROWS_AS(build_grid(1, 0), PreconditionError);
}

TEST_CASE("build_grid: points are the exact dyadic lattice, nested in finer grids", "[grid]") {
  for (int d = 1; d <= 3; ++d) {
    for (int n = 1; n <= 4; ++n) {
      const SampleGrid g = build_grid(n, d);
      REQUIRE(g.size() == (std::size_t{1} << (n * d)));
      std::set<std::vector<double>> fine;
      const SampleGrid gf = build_grid(n + 1, d);
      for (std::size_t i = 0; i < gf.size(); ++i) {
        fine.insert(std::vector<double>(gf.point(i).begin(), gf.point(i).end()));
      }
      std::set<std::vector<double>> seen;
      for (std::size_t i = 0; i < g.size(); ++i) {
        std::vector<double> p(g.point(i).begin(), g.point(i).end());
        for (double v : p) {
          CHECK(v >= 0.0);
          CHECK(v < 1.0);
          CHECK(std::ldexp(v, n) == std::floor(std::ldexp(v, n)));
        }
        CHECK(fine.contains(p));
        seen.insert(p);
      }
      CHECK(seen.size() == g.size());
    }
  }
}

TEST_CASE("build_grid: linear_index inverts the lexicographic order", "[grid]") {
  const SampleGrid g = build_grid(3, 2);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t axes[] = {static_cast<std::size_t>(g.point(i)[0] * 8),
                                static_cast<std::size_t>(g.point(i)[1] * 8)};
    CHECK(g.linear_index(axes) == i);
  }
}

TEST_CASE("observe: sigma = 0 reproduces the oracle exactly", "[grid]") {
  const SampleGrid g = build_grid(5, 2);
  const FunctionOracle f = sum_oracle();
  const ObservationSet obs = observe(f, g, 0.0, NoiseKind::gaussian, 42);
  REQUIRE(obs.size() == g.size());
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(obs.values[i] == f(g.point(i)));
}

TEST_CASE("observe: pure function of (oracle, grid, sigma, kind, seed)", "[grid]") {
  const SampleGrid g = build_grid(10, 1);
  const FunctionOracle f = sum_oracle();
  for (auto kind : {NoiseKind::gaussian, NoiseKind::uniform_bounded, NoiseKind::rademacher_scaled}) {
    const ObservationSet a = observe(f, g, 0.3, kind, 7);
    const ObservationSet b = observe(f, g, 0.3, kind, 7);
    const ObservationSet c = observe(f, g, 0.3, kind, 7, 4);
    const ObservationSet other = observe(f, g, 0.3, kind, 8);
    CHECK(a.values == b.values);
    CHECK(a.values == c.values);
    CHECK(a.values != other.values);
  }
  CHECK_THROWS_AS(observe(f, g, -1.0, NoiseKind::gaussian, 1), PreconditionError);
}

TEST_CASE("observe: gaussian noise has the prescribed moments", "[grid][statistics]") {
  // f = 0, sigma = 1, 10^6 draws; the sample mean has standard error 10^-3.
  const SampleGrid g = build_grid(20, 1);
  const ObservationSet obs = observe(constant_oracle(0.0), g, 1.0, NoiseKind::gaussian, 2024);
  const double n = static_cast<double>(obs.size());
  double mean = 0.0;
  for (double v : obs.values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : obs.values) var += (v - mean) * (v - mean);
  var /= (n - 1);
  CHECK(std::abs(mean) < 4e-3);
  CHECK(std::abs(var - 1.0) < 0.01);
}

TEST_CASE("observe: gaussian noise passes a Kolmogorov-Smirnov test", "[grid][statistics]") {
  const double sigma = 0.7;
  const SampleGrid g = build_grid(17, 1);  // 131072 draws
  const ObservationSet obs = observe(constant_oracle(0.0), g, sigma, NoiseKind::gaussian, 99);
  std::vector<double> v = obs.values;
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double D = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double F = 0.5 * std::erfc(-v[i] / (sigma * std::sqrt(2.0)));
    D = std::max({D, std::abs(F - i / n), std::abs((i + 1) / n - F)});
  }
  // asymptotic critical value at level 1e-3: sqrt(ln(2 / 1e-3) / 2) / sqrt(n)
  const double critical = std::sqrt(std::log(2.0 / 1e-3) / 2.0) / std::sqrt(n);
  CHECK(D < critical);
}

TEST_CASE("observe: bounded noise kinds have variance sigma^2 and the right support", "[grid][statistics]") {
  const double sigma = 2.0;
  const SampleGrid g = build_grid(18, 1);
  const ObservationSet uni = observe(constant_oracle(0.0), g, sigma, NoiseKind::uniform_bounded, 5);
  const ObservationSet rad = observe(constant_oracle(0.0), g, sigma, NoiseKind::rademacher_scaled, 5);
  const double bound = sigma * std::sqrt(3.0);
  double su = 0.0, sr = 0.0;
  for (double v : uni.values) {
    CHECK(std::abs(v) <= bound);
    su += v * v;
  }
  for (double v : rad.values) {
    CHECK(std::abs(v) == sigma);
    sr += v * v;
  }
  CHECK(su / uni.size() == Approx(sigma * sigma).epsilon(0.01));
  CHECK(sr / rad.size() == sigma * sigma);
}

TEST_CASE("noise kinds: names round-trip, unknown names are rejected", "[grid]") {
  for (auto kind : {NoiseKind::gaussian, NoiseKind::uniform_bounded, NoiseKind::rademacher_scaled}) {
    CHECK(parse_noise_kind(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(parse_noise_kind("cauchy"), PreconditionError);
}

TEST_CASE("observations_from_values: length is checked", "[grid]") {
  CHECK_THROWS_AS(observations_from_values(build_grid(2, 1), {1.0, 2.0}, 0.0), PreconditionError);
  const ObservationSet obs = observations_from_values(build_grid(1, 1), {1.0, 2.0}, 0.5);
  CHECK(obs.sigma == 0.5);
  CHECK(obs.values[1] == 2.0);
}
