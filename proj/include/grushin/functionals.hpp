#pragma once

#include <cstddef>
#include <span>

#include "grushin/paths.hpp"

namespace grushin {

/// Dimensions and degeneracy exponent of Delta_x + |x|^{2 gamma} Delta_y on R^d x R^{d'}.
struct GrushinParams {
  std::size_t d = 1;
  std::size_t d_prime = 1;
  double gamma = 1.0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  friend bool operator==(const GrushinParams&, const GrushinParams&) = default;
};

struct FunctionalValue {
  double value = 0.0;
  std::size_t grid_n = 0;
};

/// Trapezoidal value of int_0^T |s * path(t) + l^{T,x,xi}(t)|^{2 gamma} dt.
///
/// With s = 1 on a horizon-T bridge this is v_{T,x,xi}; with a unit-horizon
/// bridge and s = sqrt(T) it is the rescaled v-hat; with T = 1 and s = 1 it is
/// the deterministic functional of a Cameron-Martin path.
FunctionalValue v_functional(const DiscretePath& path, double horizon, std::span<const double> x,
                             std::span<const double> xi, double gamma, double path_scale = 1.0);

/// Kernel behind v_functional, for hot loops. `eps` > 0 replaces |z|^{2 gamma}
/// by (|z|^2 + eps^2)^gamma.
double v_integral(const TimeGrid& grid, std::size_t dim, std::span<const double> values,
                  std::span<const double> x, std::span<const double> xi, double gamma,
                  double path_scale = 1.0, double eps = 0.0);

/// Node maximum of |path + l^{T,0,zeta}|.
double running_max(const DiscretePath& path, double horizon, std::span<const double> zeta);

}  // namespace grushin
