#include "grushin/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace grushin {

void GrushinParams::validate() const {
  if (d < 1) throw std::invalid_argument("d must be >= 1");
  if (d_prime < 1) throw std::invalid_argument("dprime must be >= 1");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("gamma must be positive, got " + std::to_string(gamma));
  }
}

double v_integral(const TimeGrid& grid, std::size_t dim, std::span<const double> values,
                  std::span<const double> x, std::span<const double> xi, double gamma,
                  double path_scale, double eps) {
  const std::size_t n = grid.intervals();
  const double inv_t = 1.0 / grid.horizon;
  const double eps2 = eps * eps;
  const bool quadratic = (gamma == 1.0 && eps == 0.0);
  double total = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double s = grid.times[i] * inv_t;
    double r2 = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      const double z = path_scale * values[i * dim + k] + x[k] + s * (xi[k] - x[k]);
      r2 += z * z;
    }
    const double f = quadratic ? r2 : std::pow(r2 + eps2, gamma);
    if (i > 0) total += 0.5 * (prev + f) * grid.step(i - 1);
    prev = f;
  }
  return total;
}

FunctionalValue v_functional(const DiscretePath& path, double horizon, std::span<const double> x,
                             std::span<const double> xi, double gamma, double path_scale) {
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("v_functional: gamma must be positive");
  }
  if (x.size() != path.dim() || xi.size() != path.dim()) {
    throw std::invalid_argument("v_functional: x/xi dimension does not match the path");
  }
  if (path.grid().horizon != horizon) {
    throw std::invalid_argument("v_functional: path grid horizon does not match T");
  }
  return {v_integral(path.grid(), path.dim(), path.values(), x, xi, gamma, path_scale),
          path.grid().intervals()};
}

double running_max(const DiscretePath& path, double horizon, std::span<const double> zeta) {
  if (zeta.size() != path.dim()) {
    throw std::invalid_argument("running_max: zeta dimension does not match the path");
  }
  if (path.grid().horizon != horizon) {
    throw std::invalid_argument("running_max: path grid horizon does not match T");
  }
  const auto& times = path.grid().times;
  double best = 0.0;
  for (std::size_t i = 0; i < path.nodes(); ++i) {
    const double s = times[i] / horizon;
    double r2 = 0.0;
    for (std::size_t k = 0; k < path.dim(); ++k) {
      const double z = path(i, k) + s * zeta[k];
      r2 += z * z;
    }
    best = std::max(best, r2);
  }
  return std::sqrt(best);
}

}  // namespace grushin
