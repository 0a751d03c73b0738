#pragma once

#include <cstddef>
#include <vector>

#include "grushin/ensemble.hpp"
#include "grushin/functionals.hpp"
#include "grushin/paths.hpp"

namespace grushin {

/// A point (x, y) of R^d x R^{d'}.
struct EndPoint {
  std::vector<double> x;
  std::vector<double> y;
};

/// Which bridge expectation carries the estimate: bridges on [0, T] with
/// functional v, or unit-horizon bridges with the rescaled functional v-hat.
enum class DensityFormula { horizon_t, unit_horizon };

const char* to_string(DensityFormula formula);

struct DensityEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  double horizon = 0.0;
  EndPoint from;
  EndPoint to;
  DensityFormula formula = DensityFormula::horizon_t;

  /// log(mean), finite even when `mean` underflows to 0.
  double log_mean = 0.0;
  /// std_error / mean.
  double relative_stderr = 0.0;
  /// Largest single integrand over the mean; large values flag an
  /// under-resolved heavy tail.
  double tail_ratio = 0.0;
  /// True when every sample had zero weight (log_mean = -inf).
  bool underflow = false;
};

/// Monte Carlo estimate of p_T((x,y),(xi,eta)).
///
/// `shift`, when given, must be a Cameron-Martin path on the sampling grid
/// (horizon T for horizon_t, horizon 1 for unit_horizon) with grid_n intervals.
/// Samples beta are replaced by beta + shift and weighted by the exact
/// Gaussian density ratio exp(-<shift, beta> - |shift|^2 / 2).
DensityEstimate estimate_density(const GrushinParams& params, double horizon,
                                 const EndPoint& from, const EndPoint& to,
                                 const McOptions& options,
                                 DensityFormula formula = DensityFormula::horizon_t,
                                 const DiscretePath* shift = nullptr);

/// Converts a unit-horizon Cameron-Martin path h (the large-deviation
/// minimiser) into the shift that centres sqrt(T) beta on h for the given formula.
DiscretePath importance_shift(const DiscretePath& h, double horizon, DensityFormula formula,
                              std::size_t grid_n);

/// q_{T,x,xi}(eta): density of the y-displacement given x + b(T) = xi.
DensityEstimate conditional_density(const GrushinParams& params, double horizon,
                                    const std::vector<double>& x, const std::vector<double>& xi,
                                    const std::vector<double>& eta, const McOptions& options);

/// q_{T,x,xi} at many eta from one common sample set.
std::vector<DensityEstimate> conditional_density_curve(
    const GrushinParams& params, double horizon, const std::vector<double>& x,
    const std::vector<double>& xi, const std::vector<std::vector<double>>& etas,
    const McOptions& options);

/// Sample mean and standard error of v_{T,x,xi}.
MomentAccumulator functional_moments(const GrushinParams& params, double horizon,
                                     const std::vector<double>& x, const std::vector<double>& xi,
                                     const McOptions& options);

/// (2 pi)^{-(d+d')/2} E[(int_0^1 |beta|^{2 gamma})^{-d'/2}] under the unit bridge.
DensityEstimate on_diagonal_constant(const GrushinParams& params, const McOptions& options);

}  // namespace grushin
