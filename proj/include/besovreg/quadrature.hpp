#pragma once

#include <functional>
#include <span>
#include <vector>

namespace besovreg {

// Gauss-Legendre rule mapped to [0, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 1
};

// n-point rule, exact for polynomials of degree <= 2n - 1. Cached per n.
const GaussRule& gauss_legendre(int n);

// Composite tensor rule on the box [lo, hi] with `cells` equal subcells per
// axis and `order` Gauss nodes per subcell and axis. Calls visit(x, w) for
// every node; the weights include the box volume.
void for_each_composite_node(std::span<const double> lo, std::span<const double> hi, int cells,
                             int order,
                             const std::function<void(std::span<const double>, double)>& visit);

// Closed uniform grid with `points` points per axis on [lo, hi] (endpoints
// included). Calls visit(x) for every point.
void for_each_uniform_point(std::span<const double> lo, std::span<const double> hi, int points,
                            const std::function<void(std::span<const double>)>& visit);

}  // namespace besovreg
