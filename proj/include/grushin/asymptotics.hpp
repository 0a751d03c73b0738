#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "grushin/density.hpp"
#include "grushin/ensemble.hpp"
#include "grushin/functionals.hpp"
#include "grushin/variational.hpp"

namespace grushin {

struct AsymptoticsRow {
  double horizon = 0.0;
  double scaled_value = 0.0;
  double std_error = 0.0;
  /// Row excluded from the fit (all-zero weights or non-finite value).
  bool flagged = false;
  /// Largest integrand over the mean for the underlying estimate.
  double tail_ratio = 0.0;
};

enum class FitMethod { final_row, weighted_mean, affine_extrapolation };

const char* to_string(FitMethod method);

struct AsymptoticsReport {
  /// Sorted by decreasing horizon.
  std::vector<AsymptoticsRow> rows;
  double fitted_limit = 0.0;
  /// Affine extrapolation without subtracting the Gaussian prefactor
  /// (off-diagonal only; equals fitted_limit elsewhere).
  double fitted_limit_raw = 0.0;
  double fit_residual = 0.0;
  FitMethod fit_method = FitMethod::final_row;
  double theory_value = 0.0;
  double theory_std_error = 0.0;
  /// Second reading of the limit where the literature display is ambiguous;
  /// NaN when there is none.
  double alt_theory_value = std::numeric_limits<double>::quiet_NaN();
  bool passes = false;
};

/// Scaled on-diagonal densities sqrt(T)^{d+d'} p_T((x,0),(x,0)) for x != 0, or
/// sqrt(T)^{d+(1+g)d'} p_T((0,0),(0,0)) for x = 0, one independent stream per row.
///
/// Passes when the last row lies within 3 stderr + 5% of the theory value.
/// For x != 0 the limit is (2 pi)^{-(d+d')/2} |x|^{-g d'}; alt_theory_value
/// holds (2 pi)^{-d/2} |x|^{-g d'}.
AsymptoticsReport on_diagonal_experiment(const GrushinParams& params, const std::vector<double>& x,
                                         const std::vector<double>& horizons,
                                         const McOptions& options);

enum class ShiftPolicy { off, on, automatic };

const char* to_string(ShiftPolicy policy);
ShiftPolicy parse_shift_policy(const std::string& text);

struct OffDiagonalOptions {
  ShiftPolicy shift = ShiftPolicy::automatic;
  /// Horizons below this use the importance shift under ShiftPolicy::automatic.
  double shift_below = 0.1;
  double relative_tolerance = 0.10;
  std::size_t var_grid = 128;
  RateOptions rate{};
};

/// Rows of T log p_T((x,y),(xi,eta)) with stderr T * relative stderr.
///
/// The fit subtracts the exact prefactor term -(d+d')/2 T log(2 pi T) from
/// the rows and extrapolates L + c T through the three smallest horizons.
/// theory_value = -(|xi-x|^2 + m(x, xi, |eta-y|)) / 2. Rejects x = xi = 0.
AsymptoticsReport off_diagonal_experiment(const GrushinParams& params, const EndPoint& from,
                                          const EndPoint& to, const std::vector<double>& horizons,
                                          const McOptions& options,
                                          const OffDiagonalOptions& off = {});

/// Two readings of lim |eta-y|^{-2/(1+g)} lim T log p_T.
struct LargeGapConstant {
  /// c^{-2g/(1+g)} (1+g) g^{-g/(1+g)}
  double rate_constant = 0.0;
  /// -rate_constant / 2, sign-consistent with the off-diagonal limit.
  double signed_limit = 0.0;
  /// rate_constant as displayed, without the sign and the factor 1/2.
  double display_limit = 0.0;
};

LargeGapConstant large_gap_constant(double gamma, std::size_t grid_n = 256);

struct DegenerateBounds {
  double lower_const = 0.0;
  double upper_const = 0.0;
  /// Constants times |eta-y|^{2/(1+g)}.
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  double delta0_est = 0.0;
  double eps_delta0 = 0.0;
};

/// eps(delta)^2 = delta / (8 * 192^2).
double eps_of_delta(double delta);

/// Lower and upper constants for lim T log p_T((0,y),(0,eta)).
/// Throws std::invalid_argument unless delta0 > 0 and |eta-y| >= 0, and
/// std::logic_error if the lower bound exceeds the upper one.
DegenerateBounds degenerate_bounds(const GrushinParams& params, double eta_minus_y, double delta0);

struct DegenerateReport {
  DegenerateBounds bounds;
  AsymptoticsReport trend;
};

/// T log p_T((0,0),(0,eta)) with |eta| = eta_minus_y under the importance
/// shift by the minimiser of Phi_{0,0,|eta|}. Passes when the final row lies
/// between the bounds widened by 20%.
DegenerateReport degenerate_experiment(const GrushinParams& params, double eta_minus_y,
                                       double delta0, const std::vector<double>& horizons,
                                       const McOptions& options, std::size_t var_grid = 128);

struct Delta0Estimate {
  double delta = 0.0;
  double intercept = 0.0;
  std::size_t n_tail = 0;
  bool low_confidence = false;
};

/// Norms B = besov_norm(beta, 12, 1/4) of unit-horizon d-dimensional bridges.
std::vector<double> besov_samples(std::size_t dim, const McOptions& options);

/// Least-squares fit of -log P(B > b) = c0 + delta b^2 over the empirical
/// tail between the 1e-2 and 1e-4 upper quantiles. Needs >= 1e4 samples.
Delta0Estimate estimate_delta0(std::size_t dim, const McOptions& options);
Delta0Estimate fit_delta0(std::vector<double> samples);

struct MaxProbRow {
  double a = 0.0;
  std::size_t n = 0;
  /// P(M >= a), P(a <= M <= 2 sqrt(d) a) and P(M <= a) with Wilson 99% intervals.
  double p_ge = 0.0, ge_lo = 0.0, ge_hi = 0.0;
  double p_band = 0.0, band_lo = 0.0, band_hi = 0.0;
  double p_le = 0.0, le_lo = 0.0, le_hi = 0.0;
  /// Alternating series for P(M >= a) (d = 1, T = 1, zeta = 0), NaN otherwise.
  double exact_ge = std::numeric_limits<double>::quiet_NaN();
  double upper_ge = 0.0;   // 2 d exp(-2 a^2 / d), T = 1, zeta = 0
  double lower_band = 0.0; // 2 exp(-2 a^2) (1 - (d+1) exp(-6 a^2))
  double upper_le = 0.0;   // small-ball bound for P(M_{T,zeta} <= a)
  bool passes = false;
};

struct MaxProbReport {
  std::vector<MaxProbRow> rows;
  bool passes = false;
};

/// Wilson score interval at normal quantile z.
struct Interval {
  double lo = 0.0, hi = 0.0;
};
Interval wilson_interval(std::size_t hits, std::size_t n, double z = 2.5758293035489);

/// 2 sum_k (-1)^{k+1} exp(-2 k^2 a^2).
double bridge_max_tail(double a);

/// exp(|zeta|^2/2T) sqrt(2 pi T)^d / a^d exp(-d pi^2 T / 8a^2) / (1 - exp(-pi^2 T / 8a^2))^d.
double small_ball_bound(std::size_t dim, double horizon, double zeta_norm, double a);

/// Empirical laws of M_{T,zeta} = max |beta + l^{T,0,zeta}| against the bounds.
///
/// The maximum between nodes is handled by sampling, given the node values,
/// whether the bridge crosses the level inside each segment (exact in d = 1;
/// half-space approximation of the sphere for d >= 2). The two Brownian-motion
/// bounds are only asserted at T = 1, zeta = 0.
MaxProbReport max_prob_check(std::size_t dim, double horizon, const std::vector<double>& zeta,
                             const std::vector<double>& a_list, const McOptions& options);

struct TaylorRow {
  double a = 0.0;
  double f_plus = 0.0;
  double f_minus = 0.0;
  double std_error = 0.0;
};

struct TaylorCoefficient {
  int order = 0;
  double coefficient = 0.0;
  double std_error = 0.0;
};

struct TaylorFit {
  double f0_exact = 0.0;
  std::vector<TaylorCoefficient> even_coeffs;
  int max_order = 0;
  std::vector<TaylorRow> rows;
  /// max |f_plus - f_minus| over the rows.
  double evenness_residual = 0.0;
};

/// Differentiability order m(g): unbounded for integer g, floor(g) otherwise.
/// Returns -1 for "unbounded".
int taylor_order_cap(double gamma);

/// f(a) = E[(int_0^1 |a beta + l^{1,x,xi}|^{2g})^{-d'/2}] at +-a with antithetic
/// pairs (beta, -beta), then a least-squares fit of
/// f(a) - f(0) = sum_{k=1}^{max_order/2} c_{2k} a^{2k}.
/// Throws std::invalid_argument if max_order >= m(g), max_order < 2, or x = xi = 0.
TaylorFit taylor_experiment(const GrushinParams& params, const std::vector<double>& x,
                            const std::vector<double>& xi, const std::vector<double>& a_list,
                            int max_order, const McOptions& options);

}  // namespace grushin
