#include "besovreg/grid.hpp"

#include <cmath>
#include <numbers>

#include "besovreg/error.hpp"
#include "besovreg/parallel.hpp"
#include "besovreg/rng.hpp"

namespace besovreg {

SampleGrid::SampleGrid(int n, int d, std::size_t max_points) : n_(n), d_(d), m_(0) {
  if (n < 1 || d < 1) throw PreconditionError("build_grid: requires n >= 1 and d >= 1");
  const long long bits = static_cast<long long>(n) * d;
  if (bits >= 63 || (std::size_t{1} << bits) > max_points) {
    throw CapacityError("build_grid: 2^(n*d) = 2^" + std::to_string(bits) +
                        " points exceeds the configured limit of " +
                        std::to_string(max_points));
  }
  m_ = std::size_t{1} << bits;
  points_.resize(m_ * static_cast<std::size_t>(d_));
  const double h = spacing();
  const std::size_t mask = per_axis() - 1;
  for (std::size_t i = 0; i < m_; ++i) {
    std::size_t rest = i;
    for (int j = d_ - 1; j >= 0; --j) {
      points_[i * d_ + j] = static_cast<double>(rest & mask) * h;
      rest >>= n_;
    }
  }
}

double SampleGrid::spacing() const noexcept { return std::ldexp(1.0, -n_); }

std::size_t SampleGrid::linear_index(std::span<const std::size_t> axis_idx) const noexcept {
  std::size_t index = 0;
  for (int j = 0; j < d_; ++j) index = (index << n_) | axis_idx[j];
  return index;
}

SampleGrid build_grid(int n, int d, std::size_t max_points) {
  return SampleGrid(n, d, max_points);
}

NoiseKind parse_noise_kind(const std::string& name) {
  if (name == "gaussian") return NoiseKind::gaussian;
  if (name == "uniform" || name == "uniform-bounded") return NoiseKind::uniform_bounded;
  if (name == "rademacher" || name == "rademacher-scaled") return NoiseKind::rademacher_scaled;
  throw PreconditionError("unknown noise kind '" + name + "'");
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::uniform_bounded: return "uniform-bounded";
    case NoiseKind::rademacher_scaled: return "rademacher-scaled";
  }
  return "unknown";
}

double noise_at(NoiseKind kind, double sigma, std::uint64_t seed, std::uint64_t index) noexcept {
  if (sigma == 0.0) return 0.0;
  switch (kind) {
    case NoiseKind::gaussian:
      return sigma * rng::normal_at(seed, index);
    case NoiseKind::uniform_bounded:
      // uniform on [-sigma*sqrt(3), sigma*sqrt(3)] has variance sigma^2
      return sigma * std::numbers::sqrt3 * rng::symmetric_uniform_at(seed, index);
    case NoiseKind::rademacher_scaled:
      return sigma * rng::sign_at(seed, index);
  }
  return 0.0;
}

ObservationSet observe(const FunctionOracle& oracle, const SampleGrid& grid, double sigma,
                       NoiseKind kind, std::uint64_t seed, unsigned threads) {
  if (!(sigma >= 0.0)) throw PreconditionError("observe: sigma must be >= 0");
  std::vector<double> values(grid.size());
  constexpr std::size_t kChunk = 4096;
  const std::size_t chunks = (grid.size() + kChunk - 1) / kChunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t end = std::min(grid.size(), (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      values[i] = oracle(grid.point(i)) + noise_at(kind, sigma, seed, i);
    }
  });
  return ObservationSet{grid, std::move(values), sigma, kind, seed};
}

ObservationSet observations_from_values(SampleGrid grid, std::vector<double> values,
                                        double sigma) {
  if (values.size() != grid.size()) {
    throw PreconditionError("observations: expected " + std::to_string(grid.size()) +
                            " values, got " + std::to_string(values.size()));
  }
  if (!(sigma >= 0.0)) throw PreconditionError("observations: sigma must be >= 0");
  return ObservationSet{std::move(grid), std::move(values), sigma, NoiseKind::gaussian, 0};
}

}  // namespace besovreg
