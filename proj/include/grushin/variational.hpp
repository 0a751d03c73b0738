#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "grushin/paths.hpp"

namespace grushin {

// ---------------------------------------------------------------------------
// One-dimensional reduction Psi_{p,q,r}
// ---------------------------------------------------------------------------

enum class PsiBranch { gamma_lt_half, gamma_ge_half };

/// Minimiser of Psi_{p,q,r} on (0, inf).
struct PsiResult {
  double lambda_star = 0.0;
  double value = 0.0;
  PsiBranch branch = PsiBranch::gamma_ge_half;
};

/// Psi(lambda) = p / (lambda^{2g} + r) + q lambda^2      for gamma < 1/2,
///               p / (lambda + r)^{2g} + q lambda^2      for gamma >= 1/2.
double psi_value(double p, double q, double r, double gamma, double lambda);

/// Minimises Psi by bisection on its derivative (which changes sign exactly
/// once on both branches). Throws std::invalid_argument unless p, q > 0, r >= 0, gamma > 0.
PsiResult psi_minimize(double p, double q, double r, double gamma);

/// Closed form of inf Psi_{p,q,0}: (1+g) g^{-g/(1+g)} (p q^g)^{1/(1+g)}.
double psi_closed_form_value(double p, double q, double gamma);
/// Closed form of the r = 0 minimiser: (g p / q)^{1/(2+2g)}.
double psi_closed_form_lambda(double p, double q, double gamma);

// ---------------------------------------------------------------------------
// Sharp constant c_gamma
// ---------------------------------------------------------------------------

/// ||h||_{2 gamma} / ||h||_H for a unit-horizon Cameron-Martin path, with the
/// L^{2 gamma} norm evaluated by the trapezoid rule.
double cm_ratio(const DiscretePath& h, double gamma);

struct CGammaResult {
  double value = 0.0;
  DiscretePath maximizer;
  std::size_t iterations = 0;
  bool converged = false;
};

/// sup ||h||_{2 gamma} / ||h||_H over piecewise-linear paths on grid_n intervals.
CGammaResult c_gamma_solve(double gamma, std::size_t grid_n);
double c_gamma(double gamma, std::size_t grid_n);

/// B(1+gamma, 1+gamma)^{1/(2 gamma)}: upper bound for c_gamma.
double c_gamma_upper_bound(double gamma);

/// lim a^{-2/(1+g)} m(x, xi, a) = c^{-2g/(1+g)} (1+g) g^{-g/(1+g)}.
double asymptotic_rate_constant(double gamma, double c_gamma_value);

// ---------------------------------------------------------------------------
// Rate function m(x, xi, a) = inf_h a^2 / v_{x,xi}(h) + ||h||_H^2
// ---------------------------------------------------------------------------

struct PhiProblem {
  std::vector<double> x;
  std::vector<double> xi;
  double a = 0.0;
  double gamma = 1.0;
  std::size_t grid_n = 128;
};

struct RateOptions {
  std::size_t random_starts = 4;
  std::uint64_t seed = 20240607;
  std::size_t max_iterations = 10000;
  double tolerance = 1e-8;
  /// Solve the a = 1 problem at rescaled endpoints a^{-alpha} x, a^{-alpha} xi
  /// and map back, alpha = 1/(1+gamma). Exact for the discrete functional.
  bool rescale = true;
};

struct RateResult {
  double m = 0.0;
  DiscretePath minimizer;
  std::size_t iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
};

/// Phi_{x,xi,a}(h) on the unit grid of h. `eps` > 0 smooths |z|^{2 gamma}.
double phi_value(const PhiProblem& problem, const DiscretePath& h, double eps = 0.0);

/// Gradient of phi_value with respect to the node values of h (node-major,
/// zero at the pinned endpoints).
std::vector<double> phi_gradient(const PhiProblem& problem, const DiscretePath& h,
                                 double eps = 0.0);

/// Multi-start quasi-Newton minimisation of Phi. Never throws on
/// non-convergence; inspect RateResult::converged.
RateResult minimize_phi(const PhiProblem& problem, const RateOptions& options = {});

}  // namespace grushin
