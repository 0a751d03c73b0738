#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "grushin/rng.hpp"

namespace grushin {

/// Time nodes 0 = t_0 < t_1 < ... < t_n = T.
struct TimeGrid {
  double horizon = 1.0;
  std::vector<double> times;

  std::size_t intervals() const { return times.size() - 1; }
  std::size_t nodes() const { return times.size(); }
  double step(std::size_t i) const { return times[i + 1] - times[i]; }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

/// Uniform grid with spacing T/n. Throws std::invalid_argument unless T > 0, n >= 1.
TimeGrid make_uniform_grid(double horizon, std::int64_t n);

/// Grid from explicit nodes; must start at 0 and increase strictly.
TimeGrid make_grid(std::vector<double> times);

enum class PathKind { bridge_sample, linear, cameron_martin };

const char* to_string(PathKind kind);

/// A path sampled at the nodes of a grid, piecewise linear in between.
///
/// Values are stored node-major: values()[i * dim() + k] is coordinate k at t_i.
/// Bridge samples and Cameron-Martin paths are pinned to zero at both ends.
class DiscretePath {
 public:
  /// Zero Cameron-Martin path on the one-interval unit grid.
  DiscretePath();
  DiscretePath(TimeGrid grid, std::size_t dim, PathKind kind);
  DiscretePath(TimeGrid grid, std::size_t dim, std::vector<double> values, PathKind kind);

  const TimeGrid& grid() const { return grid_; }
  std::size_t dim() const { return dim_; }
  std::size_t nodes() const { return grid_.nodes(); }
  PathKind kind() const { return kind_; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  std::span<const double> node(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }
  std::span<double> node(std::size_t i) { return {values_.data() + i * dim_, dim_}; }
  double operator()(std::size_t i, std::size_t k) const { return values_[i * dim_ + k]; }
  double& operator()(std::size_t i, std::size_t k) { return values_[i * dim_ + k]; }

  /// c * path, same kind.
  DiscretePath scaled(double c) const;

 private:
  TimeGrid grid_;
  std::size_t dim_;
  std::vector<double> values_;
  PathKind kind_;
};

/// Exact node samples of the d-dimensional Brownian bridge on [0, T] pinned at 0.
DiscretePath sample_bridge(const TimeGrid& grid, std::size_t dim, const RngStream& rng);

/// In-place variant used by the Monte Carlo loops: fills `out` (nodes * dim).
void fill_bridge(const TimeGrid& grid, std::size_t dim, Engine& engine,
                 std::normal_distribution<double>& normal, std::span<double> out);

/// l(t) = x + (t/T)(xi - x) at the grid nodes.
DiscretePath linear_path(double horizon, std::span<const double> x, std::span<const double> xi,
                         const TimeGrid& grid);

/// Double-integral seminorm (int int |psi(u)-psi(v)|^p / |u-v|^{1+p theta})^{1/p}
/// of the piecewise-linear interpolant. Needs p > 1, theta in (0, 1/2), p theta > 1.
double besov_norm(const DiscretePath& path, double p = 12.0, double theta = 0.25);
double besov_norm(const TimeGrid& grid, std::size_t dim, std::span<const double> values,
                  double p = 12.0, double theta = 0.25);

/// Energy norm sqrt(sum |dh_i|^2 / dt_i) of a pinned piecewise-linear path.
double cm_norm(const DiscretePath& h);
/// Discrete Cameron-Martin inner product sum <dh_i, dg_i> / dt_i.
double cm_inner(const TimeGrid& grid, std::size_t dim, std::span<const double> h,
                std::span<const double> g);

/// Largest Euclidean norm over the nodes.
double sup_norm(const DiscretePath& path);

/// Linear interpolation of `path` onto another grid of the same horizon.
DiscretePath resample(const DiscretePath& path, const TimeGrid& grid);

}  // namespace grushin
