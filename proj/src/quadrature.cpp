#include "besovreg/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "besovreg/error.hpp"

namespace besovreg {
namespace {

GaussRule compute_rule(int n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // Newton iteration on P_n with the Chebyshev-like initial guess.
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double derivative = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      derivative = n * (x * p1 - p0) / (x * x - 1.0);
      const double step = p1 / derivative;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    // map [-1, 1] -> [0, 1]; weights halve
    rule.nodes[n - 1 - i] = 0.5 * (x + 1.0);
    rule.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * derivative * derivative);
  }
  return rule;
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
  if (n < 1) throw PreconditionError("gauss_legendre: n must be >= 1");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussRule>(compute_rule(n));
  return *slot;
}

void for_each_composite_node(std::span<const double> lo, std::span<const double> hi, int cells,
                             int order,
                             const std::function<void(std::span<const double>, double)>& visit) {
  const std::size_t d = lo.size();
  const GaussRule& rule = gauss_legendre(order);
  const int per_axis = cells * order;
  std::vector<double> axis_x(d * per_axis);
  std::vector<double> axis_w(d * per_axis);
  for (std::size_t j = 0; j < d; ++j) {
    const double width = (hi[j] - lo[j]) / cells;
    for (int c = 0; c < cells; ++c) {
      for (int g = 0; g < order; ++g) {
        axis_x[j * per_axis + c * order + g] = lo[j] + width * (c + rule.nodes[g]);
        axis_w[j * per_axis + c * order + g] = width * rule.weights[g];
      }
    }
  }
  std::vector<int> counter(d, 0);
  std::vector<double> x(d);
  for (;;) {
    double w = 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      x[j] = axis_x[j * per_axis + counter[j]];
      w *= axis_w[j * per_axis + counter[j]];
    }
    visit(x, w);
    std::size_t j = d;
    while (j > 0) {
      --j;
      if (++counter[j] < per_axis) break;
      counter[j] = 0;
      if (j == 0) return;
    }
    if (d == 0) return;
  }
}

void for_each_uniform_point(std::span<const double> lo, std::span<const double> hi, int points,
                            const std::function<void(std::span<const double>)>& visit) {
  const std::size_t d = lo.size();
  std::vector<int> counter(d, 0);
  std::vector<double> x(d);
  const double denom = points > 1 ? points - 1 : 1;
  for (;;) {
    for (std::size_t j = 0; j < d; ++j) {
      x[j] = counter[j] + 1 == points ? hi[j] : lo[j] + (hi[j] - lo[j]) * counter[j] / denom;
    }
    visit(x);
    std::size_t j = d;
    while (j > 0) {
      --j;
      if (++counter[j] < points) break;
      counter[j] = 0;
      if (j == 0) return;
    }
    if (d == 0) return;
  }
}

}  // namespace besovreg
