#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace besovreg {

// Default cap on the number of grid points, 2^26.
inline constexpr std::size_t kDefaultMaxGridPoints = std::size_t{1} << 26;

// Tensor-product dyadic grid G_n = {0, 2^-n, ..., 1 - 2^-n}^d.
//
// Points are stored flat (m * d doubles) in lexicographic order with the
// first coordinate most significant, so point i has per-axis indices given by
// the base-2^n digits of i.
class SampleGrid {
 public:
  SampleGrid(int n, int d, std::size_t max_points = kDefaultMaxGridPoints);

  int level() const noexcept { return n_; }
  int dim() const noexcept { return d_; }
  std::size_t size() const noexcept { return m_; }
  std::size_t per_axis() const noexcept { return std::size_t{1} << n_; }
  double spacing() const noexcept;

  std::span<const double> point(std::size_t i) const noexcept {
    return {points_.data() + i * static_cast<std::size_t>(d_), static_cast<std::size_t>(d_)};
  }
  std::span<const double> flat_points() const noexcept { return points_; }

  // Linear index of the point with the given per-axis indices.
  std::size_t linear_index(std::span<const std::size_t> axis_idx) const noexcept;

 private:
  int n_;
  int d_;
  std::size_t m_;
  std::vector<double> points_;
};

SampleGrid build_grid(int n, int d, std::size_t max_points = kDefaultMaxGridPoints);

using PointFunction = std::function<double(std::span<const double>)>;

// A deterministic target function together with a description.
struct FunctionOracle {
  PointFunction evaluator;
  std::string descriptor;
  // Declared Besov smoothness s(p) of the target as a function of the
  // integrability index p; empty when no finite smoothness is declared
  // (polynomials, C-infinity targets).
  std::function<double(double)> declared_smoothness;

  double operator()(std::span<const double> x) const { return evaluator(x); }
};

enum class NoiseKind { gaussian, uniform_bounded, rademacher_scaled };

NoiseKind parse_noise_kind(const std::string& name);
std::string to_string(NoiseKind kind);

struct ObservationSet {
  SampleGrid grid;
  std::vector<double> values;
  double sigma = 0.0;
  NoiseKind noise_kind = NoiseKind::gaussian;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return values.size(); }
};

// Noise value eta_i for index i of the stream `seed`, scaled to variance
// sigma^2. Pure function of its arguments.
double noise_at(NoiseKind kind, double sigma, std::uint64_t seed, std::uint64_t index) noexcept;

// y_i = f(x_i) + eta_i. `threads` only affects speed, never values.
ObservationSet observe(const FunctionOracle& oracle, const SampleGrid& grid, double sigma,
                       NoiseKind kind, std::uint64_t seed, unsigned threads = 1);

// Wraps externally supplied values (e.g. read from a file) as observations.
ObservationSet observations_from_values(SampleGrid grid, std::vector<double> values,
                                        double sigma);

}  // namespace besovreg
