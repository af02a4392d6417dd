#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace besovreg {

// Half-open dyadic cube prod_j [idx_j 2^-k, (idx_j + 1) 2^-k).
struct DyadicCube {
  int level = 0;
  std::vector<std::int64_t> idx;

  int dim() const noexcept { return static_cast<int>(idx.size()); }
  double side() const noexcept { return std::ldexp(1.0, -level); }
  double corner(int axis) const noexcept { return std::ldexp(static_cast<double>(idx[axis]), -level); }
  double volume() const noexcept { return std::ldexp(1.0, -level * dim()); }

  // Parent cube at level k - 1. Requires level >= 1.
  DyadicCube parent() const;
  // Position of this cube inside its parent: bit j is idx_j & 1, axis 0 most significant.
  std::size_t child_position() const noexcept;
  // Lexicographic index among the 2^(kd) cubes of this level, axis 0 most significant.
  std::size_t linear_index() const noexcept;
  // True when x lies in the half-open cube.
  bool contains(std::span<const double> x) const noexcept;
  // Local (reference cube) coordinates of x: u_j = (x_j - corner_j) / side.
  void to_local(std::span<const double> x, std::span<double> u) const noexcept;

  friend bool operator==(const DyadicCube&, const DyadicCube&) = default;
};

// Cube of level k with the given lexicographic index.
DyadicCube cube_from_index(int k, int d, std::size_t linear);

}  // namespace besovreg
