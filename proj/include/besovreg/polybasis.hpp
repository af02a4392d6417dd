#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "besovreg/cube.hpp"

namespace besovreg {

// Number of multi-indices alpha in N^d with |alpha| < r, i.e. binom(d + r - 1, d).
// Throws CapacityError on overflow.
std::size_t dim_poly(int r, int d);

// Polynomials of total degree < r in d variables.
class PolySpace {
 public:
  PolySpace(int r, int d);

  int order() const noexcept { return r_; }
  int dim() const noexcept { return d_; }
  std::size_t rho() const noexcept { return exponents_.size() / static_cast<std::size_t>(d_); }

  // Multi-index j in graded lexicographic order (degree first). The constant
  // comes first, then degree 1 with axis 0 highest, and so on.
  std::span<const int> exponent(std::size_t j) const noexcept {
    return {exponents_.data() + j * d_, static_cast<std::size_t>(d_)};
  }

  // L2([0,1]^d)-normalized tensor shifted Legendre products at u.
  void reference_values(std::span<const double> u, std::span<double> out) const;

 private:
  int r_;
  int d_;
  std::vector<int> exponents_;
};

// Values sqrt(2k+1) P_k(2u - 1) for k = 0..degree-1 into out.
void shifted_legendre(double u, int count, std::span<double> out) noexcept;

// Uniform discrete measure on the N^d tensor sites of a cube; sites are the
// lower-left corners {corner + side * i / N}.
struct DiscreteMeasure {
  DyadicCube cube;
  int sites_per_axis = 0;

  std::size_t site_count() const noexcept;
};

// Orthonormal basis Q_1..Q_rho of P_r in L2(mu), mu the uniform measure on the
// reference sites {0, 1/N, ..., 1 - 1/N}^d. Because the least-squares problem
// is invariant under affine maps, one instance serves every cube whose
// measure has N sites per axis; physical points are mapped to local
// coordinates first.
class OrthonormalLocalBasis {
 public:
  // Accepts the square case N^d = rho (interpolation); the shared entry
  // points orthonormal_basis and orthonormalize require N^d > rho.
  OrthonormalLocalBasis(int r, int d, int sites_per_axis);

  const PolySpace& space() const noexcept { return space_; }
  std::size_t rho() const noexcept { return space_.rho(); }
  int sites_per_axis() const noexcept { return n_sites_; }
  std::size_t site_count() const noexcept;

  // Lower-triangular matrix T with Q = T * phi, phi the reference Legendre basis.
  const Eigen::MatrixXd& transform() const noexcept { return transform_; }
  double min_gram_eigenvalue() const noexcept { return min_eigenvalue_; }

  // Q_j(u) for all j at a local point u in [0,1]^d.
  void evaluate(std::span<const double> u, std::span<double> out) const;
  // sum_j coeffs_j Q_j(u).
  double evaluate_combination(std::span<const double> coeffs, std::span<const double> u) const;
  // Coefficients of sum_j coeffs_j Q_j in the reference Legendre basis (T^T c).
  Eigen::VectorXd to_reference(std::span<const double> coeffs) const;

  // Local coordinates of site i (lexicographic, axis 0 most significant).
  void site(std::size_t i, std::span<double> u) const noexcept;

  // <values, Q_j>_mu for all j; values are listed in site order.
  std::vector<double> project(std::span<const double> values) const;

  // Matrix V (site_count x rho) with V(i, j) = phi_j(site i), reference basis.
  Eigen::MatrixXd reference_site_matrix() const;

 private:
  PolySpace space_;
  int n_sites_;
  Eigen::MatrixXd transform_;
  double min_eigenvalue_ = 0.0;
  // shifted_legendre values at the per-axis site coordinates, [a * r + k]
  std::vector<double> axis_table_;
};

// Threshold below which the Gram matrix is declared rank deficient.
inline constexpr double kRankTolerance = 1e-12;

// Shared, cached basis for (r, d, N). First construction wins; later calls
// return the same object. Thread-safe. Throws PreconditionError unless N^d > rho.
std::shared_ptr<const OrthonormalLocalBasis> orthonormal_basis(int r, int d, int sites_per_axis);

// Orthonormal basis for the measure. Throws PreconditionError when N^d <= rho
// and RankDeficiencyError when the Gram matrix is numerically singular.
std::shared_ptr<const OrthonormalLocalBasis> orthonormalize(const PolySpace& space,
                                                            const DiscreteMeasure& measure);

// A polynomial on one cube, expanded in that cube's orthonormal basis.
struct LocalPolynomial {
  DyadicCube cube;
  std::vector<double> coeffs;
  std::shared_ptr<const OrthonormalLocalBasis> basis;

  // Value at a physical point (no containment check; the closure of the cube
  // is a valid argument).
  double operator()(std::span<const double> x) const;
  double at_local(std::span<const double> u) const;
};

// Least-squares fit: coeffs_j = <values, Q_j>_mu. Throws on length mismatch.
LocalPolynomial project_ls(std::span<const double> values, const DyadicCube& cube,
                           std::shared_ptr<const OrthonormalLocalBasis> basis);

inline constexpr double kDefaultQuasiNormFloor = 0.1;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// |I|^{-1/q} ||poly||_{L_q(I)}. Composite Gauss-Legendre with r + 2 nodes per
// axis on 4 subcells per axis for finite q; dense closed grid maximum for
// q = infinity (see norm_star_dense_points).
double norm_star(const LocalPolynomial& poly, double q, double q_floor = kDefaultQuasiNormFloor);

// Same quantity for a combination given by coefficients in `basis` on the reference cube.
double norm_star(const OrthonormalLocalBasis& basis, std::span<const double> coeffs, double q,
                 double q_floor = kDefaultQuasiNormFloor);

// Points per axis of the dense grid used for q = infinity.
int norm_star_dense_points(int d) noexcept;

// Worst pairwise ratios max(x/y, y/x) over the coefficient samples between
//   continuous: ||Q||*_{L_q(I)},
//   discrete:   (N^-d sum_z |Q(z)|^q)^(1/q) over the sites z,
//   coeffs:     ||beta||_{l_q},
// for Q = sum_j beta_j Q_j in the (r, d, N) basis.
struct NormBrackets {
  double continuous_discrete = 1.0;
  double continuous_coeffs = 1.0;
  double discrete_coeffs = 1.0;

  double worst() const noexcept;
};

NormBrackets norm_equivalence_brackets(int r, int d, double q, int sites_per_axis,
                                       const std::vector<std::vector<double>>& samples);

}  // namespace besovreg
