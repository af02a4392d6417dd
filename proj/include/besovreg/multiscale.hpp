#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "besovreg/cube.hpp"
#include "besovreg/grid.hpp"
#include "besovreg/polybasis.hpp"

namespace besovreg {

// Default cap on the number of cubes enumerated at one level.
inline constexpr std::size_t kDefaultMaxCubes = std::size_t{1} << 26;

// All 2^(kd) cubes of level k in lexicographic order.
std::vector<DyadicCube> cubes_at_level(int k, int d, std::size_t max_cubes = kDefaultMaxCubes);

// Cube of level k containing x. Coordinates equal to 1 map to the last cube
// (closure of the half-open partition). Throws DomainError outside [0,1]^d.
DyadicCube locate(std::span<const double> x, int k);
// Lexicographic index of locate(x, k) without materializing the cube.
std::size_t locate_index(std::span<const double> x, int k);

// Element of S_k(r): one local polynomial per cube of D_k. Coefficients are
// stored flat, cell-major in cube lexicographic order, in the orthonormal
// basis of the discrete measure with `basis->sites_per_axis()` sites per axis.
struct PiecewisePoly {
  int level = 0;
  int d = 1;
  int r = 1;
  std::shared_ptr<const OrthonormalLocalBasis> basis;
  std::vector<double> coeffs;

  std::size_t rho() const noexcept { return basis->rho(); }
  std::size_t cell_count() const noexcept { return std::size_t{1} << (level * d); }
  std::span<const double> cell_coeffs(std::size_t cell) const noexcept {
    return std::span(coeffs).subspan(cell * rho(), rho());
  }
  std::span<double> cell_coeffs(std::size_t cell) noexcept {
    return std::span(coeffs).subspan(cell * rho(), rho());
  }
  LocalPolynomial cell(std::size_t index) const;

  double operator()(std::span<const double> x) const;
};

// Zero element of S_k(r) with the given basis resolution.
PiecewisePoly zero_piecewise(int level, int d, int r, int sites_per_axis);

// Value of the cell polynomial at x in [0,1]^d (locate's closure convention).
double eval_pwp(const PiecewisePoly& s, std::span<const double> x);

// nu_k: level-k multiscale coefficients, flat in (cube lex index, j) order.
struct CoefficientVector {
  int level = 0;
  int d = 1;
  int r = 1;
  std::size_t rho = 1;
  std::vector<double> entries;

  std::size_t size() const noexcept { return entries.size(); }
  std::span<const double> cell(std::size_t i) const noexcept {
    return std::span(entries).subspan(i * rho, rho);
  }
};

struct MultiscaleDecomposition {
  int n = 0;  // grid level of the data
  int d = 1;
  int r = 1;
  std::vector<CoefficientVector> levels;  // nu_0 .. nu_{n-r}

  int max_level() const noexcept { return static_cast<int>(levels.size()) - 1; }
  // Sites per axis of level-k cubes, 2^(n-k).
  int sites_per_axis(int k) const noexcept { return 1 << (n - k); }
};

// Values of obs at the sites of `cube`, in the cube's local site order.
std::vector<double> gather_cube_values(const ObservationSet& obs, const DyadicCube& cube);

// S_k y: per-cube least-squares fit. Throws LevelTooDeepError if k > n - r.
PiecewisePoly project_level(const ObservationSet& obs, int k, int r, unsigned threads = 1);

// Matrix mapping parent coefficients (basis with 2N sites per axis) to the
// coefficients of the parent polynomial re-projected on the child at
// `child_position` (basis with N sites per axis). Exact for P_r, cached.
const Eigen::MatrixXd& refinement_matrix(int r, int d, int child_sites_per_axis,
                                         std::size_t child_position);

// nu*_0 .. nu*_{n-r}: nu_0 are the coefficients of S_0 y and, for k >= 1,
// nu_k holds the expansion of P_I - P_{I'} in the basis of I.
MultiscaleDecomposition decompose(const ObservationSet& obs, int r, unsigned threads = 1);

// sum_{j <= up_to} T_j as an element of S_{up_to}(r).
PiecewisePoly reconstruct(const MultiscaleDecomposition& decomposition, int up_to_level);

// T_k = sum_I [sum_j c_{I,j} Q_{I,j}] chi_I for one coefficient vector; the
// basis has `sites_per_axis` sites per axis.
PiecewisePoly piecewise_from_coefficients(const CoefficientVector& nu, int sites_per_axis);

}  // namespace besovreg
