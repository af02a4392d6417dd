#include "besovreg/cube.hpp"

#include "besovreg/error.hpp"

namespace besovreg {

DyadicCube DyadicCube::parent() const {
  if (level < 1) throw PreconditionError("DyadicCube::parent: level-0 cube has no parent");
  DyadicCube p{level - 1, idx};
  for (auto& i : p.idx) i >>= 1;
  return p;
}

std::size_t DyadicCube::child_position() const noexcept {
  std::size_t pos = 0;
  for (auto i : idx) pos = (pos << 1) | static_cast<std::size_t>(i & 1);
  return pos;
}

std::size_t DyadicCube::linear_index() const noexcept {
  std::size_t linear = 0;
  for (auto i : idx) linear = (linear << level) | static_cast<std::size_t>(i);
  return linear;
}

bool DyadicCube::contains(std::span<const double> x) const noexcept {
  const double h = side();
  for (int j = 0; j < dim(); ++j) {
    const double lo = corner(j);
    if (x[j] < lo || x[j] >= lo + h) return false;
  }
  return true;
}

void DyadicCube::to_local(std::span<const double> x, std::span<double> u) const noexcept {
  const double scale = std::ldexp(1.0, level);
  for (int j = 0; j < dim(); ++j) u[j] = x[j] * scale - static_cast<double>(idx[j]);
}

DyadicCube cube_from_index(int k, int d, std::size_t linear) {
  DyadicCube cube{k, std::vector<std::int64_t>(d)};
  const std::size_t mask = (std::size_t{1} << k) - 1;
  for (int j = d - 1; j >= 0; --j) {
    cube.idx[j] = static_cast<std::int64_t>(linear & mask);
    linear >>= k;
  }
  return cube;
}

}  // namespace besovreg
