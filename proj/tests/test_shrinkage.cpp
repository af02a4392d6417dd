#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "besovreg/analysis.hpp"
#include "besovreg/error.hpp"
#include "besovreg/oracles.hpp"
#include "besovreg/rng.hpp"
#include "besovreg/shrinkage.hpp"

using namespace besovreg;
using Catch::Approx;

namespace {

EstimatorConfig base_config(double s, double p, double q, int d, double sigma) {
  EstimatorConfig c;
  c.s = s;
  c.p = p;
  c.q = q;
  c.d = d;
  c.sigma = sigma;
  return c;
}

double sup_gap(const PiecewisePoly& a, const PiecewisePoly& b) {
  return lq_distance([&](std::span<const double> x) { return eval_pwp(a, x); },
                     [&](std::span<const double> x) { return eval_pwp(b, x); }, a.d, kInfinity,
                     QuadratureSpec{a.d == 1 ? 11 : 6, 0});
}

}  // namespace

TEST_CASE("epsilon: closed-form examples", "[shrinkage]") {
  CHECK(epsilon(0.0, 1024, 1.0, 1) == 0.0);
  CHECK(epsilon(32.0, 1024, 1.0, 1) == Approx(1.0));
  CHECK(epsilon(1.0, 1024, 1.0, 1) == Approx(0.09921).epsilon(1e-4));
  CHECK(epsilon(1.0, 1024, 1.0, 1) == Approx(std::exp2(-10.0 / 3.0)).epsilon(1e-14));
  CHECK_THROWS_AS(epsilon(1.0, 0.5, 1.0, 1), PreconditionError);
}

TEST_CASE("k_star: bracketing examples and sandwich property", "[shrinkage]") {
  CHECK(k_star(0.25, 1.0) == 3);
  CHECK(k_star(0.5, 1.0) == 2);
  CHECK_FALSE(k_star(0.0, 1.0).has_value());
  CHECK_THROWS_AS(k_star(1.0, 1.0), DomainError);
  CHECK_THROWS_AS(k_star(1.5, 2.0), DomainError);
  rng::Xoshiro256 gen(12);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const double eps = std::exp(-12.0 * unif(gen)) * 0.999;
    const double s = 0.3 + 3.0 * unif(gen);
    const int k = *k_star(eps, s);
    const double x = std::pow(eps, -1.0 / s);
    CHECK(std::ldexp(1.0, k - 1) <= x);
    CHECK(x < std::ldexp(1.0, k));
  }
}

TEST_CASE("schedule: worked example lambda_5 = 0.5", "[shrinkage]") {
  // s = 1, d = 1, n = 8: eps = (4 / 256)^(1/3) = 1/4, k* = 3
  EstimatorConfig c = base_config(1.0, 2.0, 2.0, 1, 2.0);
  c.beta = 1.0;
  c.kappa = 1.0;
  const ThresholdSchedule sched = schedule(c, 8);
  CHECK(sched.epsilon == Approx(0.25));
  REQUIRE(sched.k_star == 3);
  REQUIRE(sched.lambdas.size() == 7);
  for (int k = 0; k <= 3; ++k) CHECK(sched.lambdas[k] == 0.0);
  CHECK(sched.lambdas[4] == Approx(0.25));
  CHECK(sched.lambdas[5] == Approx(0.5));
  CHECK(sched.lambdas[6] == Approx(1.0));
}

TEST_CASE("schedule: sigma = 0 disables thresholding", "[shrinkage]") {
  const ThresholdSchedule sched = schedule(base_config(2.0, 2.0, 2.0, 1, 0.0), 9);
  CHECK_FALSE(sched.k_star.has_value());
  for (double l : sched.lambdas) CHECK(l == 0.0);
}

TEST_CASE("schedule: thresholds grow with sigma", "[shrinkage][property]") {
  std::vector<double> prev;
  for (double sigma : {0.01, 0.03, 0.1, 0.3, 1.0, 3.0}) {
    const ThresholdSchedule sched = schedule(base_config(1.5, 2.0, 2.0, 1, sigma), 10);
    if (!prev.empty()) {
      for (std::size_t k = 0; k < prev.size(); ++k) CHECK(sched.lambdas[k] >= prev[k]);
    }
    for (std::size_t k = 1; k < sched.lambdas.size(); ++k) {
      if (sched.lambdas[k - 1] > 0) CHECK(sched.lambdas[k] > sched.lambdas[k - 1]);
    }
    prev = sched.lambdas;
  }
}

TEST_CASE("default_beta: midpoint rule and fallback", "[shrinkage]") {
  CHECK(default_beta(base_config(2.0, 2.0, 2.0, 1, 0.0)) == Approx(2.5));
  // p < q: interval (1/2, 2) has midpoint 1.25
  CHECK(default_beta(base_config(2.0, 1.0, 2.0, 1, 0.0)) == Approx(1.25));
  // p > q reduces to p = q
  CHECK(default_beta(base_config(2.0, 4.0, 2.0, 1, 0.0)) == Approx(2.5));
  const BetaInterval interval = beta_interval(base_config(2.0, 1.0, 2.0, 1, 0.0));
  CHECK(interval.lower == Approx(0.5));
  CHECK(interval.upper == Approx(2.0));
}

TEST_CASE("validate: named violations and regime warnings", "[shrinkage]") {
  auto message = [](const EstimatorConfig& c) {
    try {
      validate(c);
    } catch (const PreconditionError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message(base_config(0.4, 2.0, 2.0, 1, 0.0)).find("compact embedding s > d/p") !=
        std::string::npos);
  EstimatorConfig bad_beta = base_config(2.0, 1.0, 2.0, 1, 0.0);
  bad_beta.beta = 3.0;
  CHECK(message(bad_beta).find("invalid beta") != std::string::npos);
  EstimatorConfig bad_kappa = base_config(2.0, 2.0, 2.0, 1, 0.0);
  bad_kappa.kappa = 0.0;
  CHECK_FALSE(message(bad_kappa).empty());
  CHECK_FALSE(message(base_config(2.0, 2.0, 0.5, 1, 0.0)).empty());

  const ConfigCheck ok = validate(base_config(2.0, 2.0, 2.0, 1, 0.0));
  CHECK(ok.primary_regime);
  CHECK(ok.warnings.empty());
  // q = 8 > p + 2sp/d = 1 + 2 * 1.5 = 4
  const ConfigCheck outside = validate(base_config(1.5, 1.0, 8.0, 1, 0.0));
  CHECK_FALSE(outside.primary_regime);
  REQUIRE(outside.warnings.size() == 1);
  CHECK(outside.warnings[0].find("outside primary regime") != std::string::npos);
}

TEST_CASE("hard_threshold: keeps strictly larger magnitudes", "[shrinkage]") {
  CHECK(hard_threshold(0.3, 0.5) == 0.0);
  CHECK(hard_threshold(-0.7, 0.5) == -0.7);
  CHECK(hard_threshold(0.5, 0.5) == 0.0);
  CHECK(hard_threshold(0.2, 0.0) == 0.2);
  CHECK(hard_threshold(0.0, 0.0) == 0.0);
}

TEST_CASE("threshold_level: identity at zero and zeroed fraction", "[shrinkage]") {
  CoefficientVector nu{2, 1, 2, 2, {0.1, -0.4, 0.9, 0.0, -1.2, 0.3, 0.05, 2.0}};
  const ThresholdedLevel keep = threshold_level(nu, 0.0);
  CHECK(keep.nu.entries == nu.entries);
  CHECK(keep.zeroed_fraction == 0.0);
  const ThresholdedLevel half = threshold_level(nu, 0.35);
  CHECK(half.nu.entries == std::vector<double>{0.0, -0.4, 0.9, 0.0, -1.2, 0.0, 0.0, 2.0});
  CHECK(half.zeroed_fraction == Approx(3.0 / 8.0));
  CHECK_THROWS_AS(threshold_level(nu, -1.0), PreconditionError);
}

TEST_CASE("threshold_level: deterministic three-term bound", "[shrinkage][property]") {
  rng::Xoshiro256 gen(2024);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int violations = 0;
  for (int inst = 0; inst < 20000; ++inst) {
    const auto L = static_cast<std::size_t>(1 + unif(gen) * 40);
    const double q = 1.0 + 5.0 * unif(gen);
    const double lambda = 2.0 * unif(gen);
    CoefficientVector nu{0, 1, 1, 1, std::vector<double>(L)};
    std::vector<double> xi(L), trunc(L), noise_part(L), err(L);
    for (std::size_t i = 0; i < L; ++i) {
      nu.entries[i] = unif(gen) < 0.5 ? 0.0 : 3.0 * (unif(gen) - 0.5);
      xi[i] = 0.5 * rng::normal_at(inst, i);
    }
    CoefficientVector observed = nu;
    for (std::size_t i = 0; i < L; ++i) observed.entries[i] += xi[i];
    const ThresholdedLevel t = threshold_level(observed, lambda);
    for (std::size_t i = 0; i < L; ++i) {
      err[i] = nu.entries[i] - t.nu.entries[i];
      trunc[i] = std::min(std::abs(nu.entries[i]), lambda);
      noise_part[i] = std::abs(xi[i]) > lambda / 2 ? xi[i] : 0.0;
    }
    const double lhs = weighted_norm(err, q);
    const double rhs = 3.0 * (weighted_norm(trunc, q) + weighted_norm(noise_part, q));
    if (lhs > rhs * (1.0 + 1e-12) + 1e-15) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("weighted_norm: normalized l_q values", "[shrinkage]") {
  const std::vector<double> v{3.0, -4.0};
  CHECK(weighted_norm(v, 2.0) == Approx(std::sqrt(12.5)));
  CHECK(weighted_norm(v, 1.0) == Approx(3.5));
  CHECK(weighted_norm(v, kInfinity) == 4.0);
  CHECK(weighted_norm(std::vector<double>{}, 2.0) == 0.0);
}

TEST_CASE("estimate: Step 0 returns zero exactly when sigma^2 >= m M^2", "[shrinkage]") {
  const FunctionOracle f = make_target({"bump", {}}, 1);
  const SampleGrid grid = build_grid(6, 1);
  for (double M : {0.5, 1.0, 2.0}) {
    const double boundary = 8.0 * M;  // sqrt(m) M
    for (double sigma : {0.9 * boundary, boundary, 1.1 * boundary}) {
      EstimatorConfig c = base_config(1.0, 2.0, 2.0, 1, sigma);
      c.norm_scale = M;
      const EstimateResult r = estimate_detailed(observe(f, grid, sigma, NoiseKind::gaussian, 3), c);
      CHECK(r.step0_zero == (sigma >= boundary));
      if (r.step0_zero) {
        for (double v : r.estimate.coeffs) CHECK(v == 0.0);
      }
    }
  }
}

TEST_CASE("estimate: sigma = 0 reproduces S_{n-r}(r) members", "[shrinkage]") {
  for (int d = 1; d <= 2; ++d) {
    const int n = d == 1 ? 8 : 5;
    const FunctionOracle pw = make_target({"piecewise", {{"k", 3}, {"r", 2}, {"seed", 11}}}, d);
    const ObservationSet obs = observe(pw, build_grid(n, d), 0.0, NoiseKind::gaussian, 1);
    const PiecewisePoly est = estimate(obs, base_config(1.5, 2.0, 2.0, d, 0.0));
    CHECK(lq_distance(pw, est, kInfinity, QuadratureSpec{d == 1 ? 11 : 7, 0}) <= 1e-10);
  }
}

TEST_CASE("estimate: equivariant under joint scaling of data, sigma and M", "[shrinkage][property]") {
  const FunctionOracle f = make_target({"cusp", {}}, 1);
  const SampleGrid grid = build_grid(9, 1);
  const ObservationSet obs = observe(f, grid, 0.4, NoiseKind::gaussian, 21);
  const EstimatorConfig c = base_config(2.0, 2.0, 2.0, 1, 0.4);
  const PiecewisePoly base = estimate(obs, c);
  for (double a : {0.25, 3.0}) {
    std::vector<double> scaled = obs.values;
    for (double& v : scaled) v *= a;
    EstimatorConfig ca = c;
    ca.sigma *= a;
    ca.norm_scale *= a;
    const PiecewisePoly est = estimate(observations_from_values(grid, scaled, ca.sigma), ca);
    REQUIRE(est.coeffs.size() == base.coeffs.size());
    for (std::size_t i = 0; i < est.coeffs.size(); ++i) {
      CHECK(est.coeffs[i] == Approx(a * base.coeffs[i]).margin(1e-12 * a));
    }
  }
}

TEST_CASE("estimate: continuous as sigma tends to zero", "[shrinkage][property]") {
  const FunctionOracle f = make_target({"cusp", {}}, 1);
  const SampleGrid grid = build_grid(10, 1);
  const ObservationSet clean = observe(f, grid, 0.0, NoiseKind::gaussian, 5);
  const ObservationSet tiny = observe(f, grid, 1e-6, NoiseKind::gaussian, 5);
  const PiecewisePoly a = estimate(clean, base_config(2.0, 2.0, 2.0, 1, 0.0));
  const PiecewisePoly b = estimate(tiny, base_config(2.0, 2.0, 2.0, 1, 1e-6));
  CHECK(sup_gap(a, b) <= 1e-3);
}

TEST_CASE("estimate: warnings and per-level zeroed fractions", "[shrinkage]") {
  const FunctionOracle f = make_target({"bump", {}}, 1);
  const ObservationSet obs = observe(f, build_grid(8, 1), 0.5, NoiseKind::gaussian, 2);
  EstimatorConfig c = base_config(1.5, 1.0, 8.0, 1, 0.5);
  const EstimateResult r = estimate_detailed(obs, c);
  CHECK(r.warnings.size() == 1);
  CHECK(r.zeroed_fraction.size() == 8 - 2 + 1);
  for (double z : r.zeroed_fraction) CHECK((z >= 0.0 && z <= 1.0));
  EstimatorConfig wrong_d = base_config(1.0, 2.0, 2.0, 2, 0.5);
  CHECK_THROWS_AS(estimate(obs, wrong_d), PreconditionError);
}

TEST_CASE("deterministic_sum: bounded by a stable multiple of epsilon", "[shrinkage][property]") {
  for (const auto& c : {base_config(2.0, 2.0, 2.0, 1, 0.0), base_config(2.0, 1.0, 2.0, 1, 0.0),
                        base_config(1.5, 2.0, 3.0, 2, 0.0)}) {
    double lo = kInfinity, hi = 0.0;
    const int n = c.d == 1 ? 60 : 30;
    for (double ratio = 1e-9; ratio < 1e-2; ratio *= 3.7) {
      EstimatorConfig ci = c;
      ci.sigma = std::sqrt(ratio * std::ldexp(1.0, n * c.d));
      const ThresholdSchedule sched = schedule(ci, n);
      const double sum = deterministic_sum(sched, ci);
      // 2^(-k* s) / eps lies in (2^-s, 1], so the ratio may move by at most 2^s
      const double ratio_sum = sum / sched.epsilon;
      lo = std::min(lo, ratio_sum);
      hi = std::max(hi, ratio_sum);
    }
    CHECK(lo > 0.0);
    CHECK(hi / lo < std::exp2(c.s) * 1.01);
  }
}
