#include "grushin/variational.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "grushin/functionals.hpp"
#include "grushin/optimize.hpp"

namespace grushin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Psi
// ---------------------------------------------------------------------------

void check_psi_args(double p, double q, double r, double gamma) {
  if (!(p > 0.0)) throw std::invalid_argument("psi: p must be positive");
  if (!(q > 0.0)) throw std::invalid_argument("psi: q must be positive");
  if (!(r >= 0.0)) throw std::invalid_argument("psi: r must be nonnegative");
  if (!(gamma > 0.0)) throw std::invalid_argument("psi: gamma must be positive");
}

double psi_derivative(double p, double q, double r, double gamma, double lambda) {
  if (gamma < 0.5) {
    const double l2g = std::pow(lambda, 2.0 * gamma);
    const double den = l2g + r;
    return -2.0 * gamma * p * l2g / (lambda * den * den) + 2.0 * q * lambda;
  }
  return -2.0 * gamma * p * std::pow(lambda + r, -2.0 * gamma - 1.0) + 2.0 * q * lambda;
}

// ---------------------------------------------------------------------------
// Orthonormal sine basis scaled so that ||h||_H^2 = |c|^2 on a uniform unit grid.
// ---------------------------------------------------------------------------

class EnergyBasis {
 public:
  explicit EnergyBasis(std::size_t n) : n_(n), m_(n - 1), basis_(m_, m_), inverse_(m_, m_) {
    const double dt = 1.0 / static_cast<double>(n);
    const double norm = std::sqrt(2.0 / static_cast<double>(n));
    for (std::size_t k = 0; k < m_; ++k) {
      const double s = std::sin(std::numbers::pi * static_cast<double>(k + 1) / (2.0 * n));
      const double mu = 4.0 * s * s;  // eigenvalue of tridiag(-1, 2, -1)
      const double scale = std::sqrt(dt / mu);
      for (std::size_t i = 0; i < m_; ++i) {
        const double v =
            norm * std::sin(std::numbers::pi * static_cast<double>((i + 1) * (k + 1)) / n);
        basis_(i, k) = v * scale;
        inverse_(k, i) = v / scale;
      }
    }
  }

  std::size_t interior() const { return m_; }

  /// Coefficients (m x dim, column-major) -> node-major path values.
  void to_nodes(std::span<const double> c, std::size_t dim, std::vector<double>& nodes) const {
    Eigen::Map<const Eigen::MatrixXd> coeffs(c.data(), m_, dim);
    const Eigen::MatrixXd interior = basis_ * coeffs;
    nodes.assign((n_ + 1) * dim, 0.0);
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t k = 0; k < dim; ++k) nodes[(i + 1) * dim + k] = interior(i, k);
  }

  std::vector<double> from_nodes(std::span<const double> nodes, std::size_t dim) const {
    Eigen::MatrixXd interior(m_, dim);
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t k = 0; k < dim; ++k) interior(i, k) = nodes[(i + 1) * dim + k];
    const Eigen::MatrixXd c = inverse_ * interior;
    return {c.data(), c.data() + c.size()};
  }

  /// Node-space gradient (node-major) -> coefficient gradient.
  void pull_back(std::span<const double> node_grad, std::size_t dim, std::span<double> out) const {
    Eigen::MatrixXd g(m_, dim);
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t k = 0; k < dim; ++k) g(i, k) = node_grad[(i + 1) * dim + k];
    Eigen::Map<Eigen::MatrixXd>(out.data(), m_, dim) = basis_.transpose() * g;
  }

 private:
  std::size_t n_, m_;
  Eigen::MatrixXd basis_;
  Eigen::MatrixXd inverse_;
};

// v_{x,xi}(h) on the unit grid and its node gradient (written when grad is non-empty).
double v_with_gradient(const TimeGrid& grid, std::size_t dim, std::span<const double> h,
                       std::span<const double> x, std::span<const double> xi, double gamma,
                       double eps, std::span<double> grad) {
  const std::size_t n = grid.intervals();
  const double eps2 = eps * eps;
  double total = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double w = 0.5 * ((i > 0 ? grid.step(i - 1) : 0.0) + (i < n ? grid.step(i) : 0.0));
    const double s = grid.times[i];
    double r2 = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      const double z = h[i * dim + k] + x[k] + s * (xi[k] - x[k]);
      r2 += z * z;
    }
    const double base = r2 + eps2;
    total += w * (gamma == 1.0 ? base : std::pow(base, gamma));
    if (!grad.empty()) {
      const bool pinned = (i == 0 || i == n);
      double coef = 0.0;
      if (!pinned && base > 0.0) coef = w * 2.0 * gamma * (gamma == 1.0 ? 1.0 : std::pow(base, gamma - 1.0));
      for (std::size_t k = 0; k < dim; ++k) {
        const double z = h[i * dim + k] + x[k] + s * (xi[k] - x[k]);
        grad[i * dim + k] = coef * z;
      }
    }
  }
  return total;
}

double energy_nodes(const TimeGrid& grid, std::size_t dim, std::span<const double> h) {
  return cm_inner(grid, dim, h, h);
}

void check_problem(const PhiProblem& problem) {
  if (problem.x.empty() || problem.x.size() != problem.xi.size()) {
    throw std::invalid_argument("PhiProblem: x and xi must have the same nonzero dimension");
  }
  if (!(problem.a >= 0.0)) throw std::invalid_argument("PhiProblem: a must be nonnegative");
  if (!(problem.gamma > 0.0)) throw std::invalid_argument("PhiProblem: gamma must be positive");
  if (problem.grid_n < 2) throw std::invalid_argument("PhiProblem: grid_n must be >= 2");
}

void check_unit_path(const PhiProblem& problem, const DiscretePath& h) {
  if (h.grid().horizon != 1.0 || h.dim() != problem.x.size()) {
    throw std::invalid_argument("Phi: h must be a unit-horizon path of dimension d");
  }
}

struct StartOutcome {
  LbfgsResult fit;
  double phi = kInf;
  double energy = kInf;
};

bool better(const StartOutcome& a, const StartOutcome& b) {
  if (std::abs(a.phi - b.phi) < 1e-10) return a.energy < b.energy;
  return a.phi < b.phi;
}

// Minimises Phi_{x,xi,a} directly (no rescaling) over the sine coefficients.
StartOutcome solve_direct(const PhiProblem& problem, const RateOptions& options,
                          const EnergyBasis& basis, const TimeGrid& grid) {
  const std::size_t dim = problem.x.size();
  const std::size_t m = basis.interior();
  const double a2 = problem.a * problem.a;
  const double gamma = problem.gamma;

  auto make_objective = [&](double eps) {
    return [&, eps](std::span<const double> c, std::span<double> grad) -> double {
      thread_local std::vector<double> nodes, vgrad;
      basis.to_nodes(c, dim, nodes);
      vgrad.assign(nodes.size(), 0.0);
      const double v = v_with_gradient(grid, dim, nodes, problem.x, problem.xi, gamma, eps, vgrad);
      if (!(v > 0.0)) return kInf;
      double cc = 0.0;
      for (double ci : c) cc += ci * ci;
      const double factor = -a2 / (v * v);
      for (double& g : vgrad) g *= factor;
      basis.pull_back(vgrad, dim, grad);
      for (std::size_t i = 0; i < c.size(); ++i) grad[i] += 2.0 * c[i];
      return a2 / v + cc;
    };
  };

  // Ray seed lambda sin(pi t) e, with lambda the exact minimiser of Phi_{0,0,a} along the ray.
  std::vector<double> direction(dim, 0.0);
  double dn = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    direction[k] = problem.x[k] + problem.xi[k];
    dn += direction[k] * direction[k];
  }
  if (dn == 0.0) {
    direction.assign(dim, 0.0);
    direction[0] = 1.0;
  } else {
    for (double& e : direction) e /= std::sqrt(dn);
  }
  std::vector<double> sine(grid.nodes() * dim, 0.0);
  for (std::size_t i = 1; i < grid.intervals(); ++i)
    for (std::size_t k = 0; k < dim; ++k)
      sine[i * dim + k] = std::sin(std::numbers::pi * grid.times[i]) * direction[k];
  const std::vector<double> zero_x(dim, 0.0);
  const double sine_v =
      v_with_gradient(grid, dim, sine, zero_x, zero_x, gamma, 0.0, std::span<double>{});
  const double sine_e = energy_nodes(grid, dim, sine);
  const double lambda =
      problem.a > 0.0 ? psi_minimize(a2 / sine_v, sine_e, 0.0, gamma).lambda_star : 1.0;
  for (double& v : sine) v *= lambda;

  std::vector<std::vector<double>> starts;
  bool degenerate = true;
  for (std::size_t k = 0; k < dim; ++k) degenerate = degenerate && problem.x[k] == 0.0 && problem.xi[k] == 0.0;
  if (!degenerate) starts.emplace_back(m * dim, 0.0);
  starts.push_back(basis.from_nodes(sine, dim));
  {
    std::mt19937_64 engine(options.seed);
    std::normal_distribution<double> normal;
    const double scale = lambda * std::sqrt(sine_e) / std::sqrt(static_cast<double>(m * dim));
    for (std::size_t s = 0; s < options.random_starts; ++s) {
      std::vector<double> c(m * dim);
      for (double& ci : c) ci = scale * normal(engine);
      starts.push_back(std::move(c));
    }
  }

  LbfgsOptions lb;
  lb.max_iterations = options.max_iterations;
  lb.grad_tolerance = options.tolerance;

  const bool smooth = gamma >= 0.5;
  const std::vector<double> schedule = smooth ? std::vector<double>{0.0}
                                              : std::vector<double>{1e-2, 1e-4, 1e-6};
  StartOutcome best;
  for (const auto& start : starts) {
    const auto objective = make_objective(schedule.front());
    StartOutcome out;
    out.fit = minimize_lbfgs(objective, start, lb);
    if (!std::isfinite(out.fit.value)) continue;
    out.phi = out.fit.value;
    out.energy = 0.0;
    for (double ci : out.fit.x) out.energy += ci * ci;
    if (!std::isfinite(best.phi) || better(out, best)) best = std::move(out);
  }
  if (!std::isfinite(best.phi)) return best;

  // Continuation eps -> 0 from the best regularised start.
  std::size_t total_iterations = best.fit.iterations;
  for (std::size_t s = 1; s < schedule.size(); ++s) {
    const auto objective = make_objective(schedule[s]);
    LbfgsResult refined = minimize_lbfgs(objective, best.fit.x, lb);
    total_iterations += refined.iterations;
    best.fit = std::move(refined);
  }
  best.fit.iterations = total_iterations;
  if (!smooth) {
    // Report the unregularised functional at the final path.
    std::vector<double> scratch(best.fit.x.size());
    best.phi = make_objective(0.0)(best.fit.x, scratch);
  } else {
    best.phi = best.fit.value;
  }
  return best;
}

}  // namespace

double psi_value(double p, double q, double r, double gamma, double lambda) {
  if (gamma < 0.5) return p / (std::pow(lambda, 2.0 * gamma) + r) + q * lambda * lambda;
  return p / std::pow(lambda + r, 2.0 * gamma) + q * lambda * lambda;
}

double psi_closed_form_value(double p, double q, double gamma) {
  return (1.0 + gamma) * std::pow(gamma, -gamma / (1.0 + gamma)) *
         std::pow(p * std::pow(q, gamma), 1.0 / (1.0 + gamma));
}

double psi_closed_form_lambda(double p, double q, double gamma) {
  return std::pow(gamma * p / q, 1.0 / (2.0 + 2.0 * gamma));
}

PsiResult psi_minimize(double p, double q, double r, double gamma) {
  check_psi_args(p, q, r, gamma);
  auto dpsi = [&](double lambda) { return psi_derivative(p, q, r, gamma, lambda); };

  // Bracket the unique sign change of Psi' in log(lambda).
  double lo = psi_closed_form_lambda(p, q, gamma);
  double hi = lo;
  while (dpsi(lo) >= 0.0 && lo > 1e-300) lo *= 0.5;
  while (dpsi(hi) <= 0.0 && hi < 1e300) hi *= 2.0;
  for (int it = 0; it < 400; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (!(mid > lo && mid < hi)) break;
    (dpsi(mid) < 0.0 ? lo : hi) = mid;
  }
  PsiResult out;
  // The two bracket ends differ in the last bit; pick the smaller value.
  const double vlo = psi_value(p, q, r, gamma, lo), vhi = psi_value(p, q, r, gamma, hi);
  out.lambda_star = vlo <= vhi ? lo : hi;
  out.value = std::min(vlo, vhi);
  out.branch = gamma < 0.5 ? PsiBranch::gamma_lt_half : PsiBranch::gamma_ge_half;
  return out;
}

double cm_ratio(const DiscretePath& h, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("cm_ratio: gamma must be positive");
  const std::vector<double> zero(h.dim(), 0.0);
  const double v = v_integral(h.grid(), h.dim(), h.values(), zero, zero, gamma);
  return std::pow(v, 1.0 / (2.0 * gamma)) / cm_norm(h);
}

CGammaResult c_gamma_solve(double gamma, std::size_t grid_n) {
  if (!(gamma > 0.0)) throw std::invalid_argument("c_gamma: gamma must be positive");
  if (grid_n < 8) throw std::invalid_argument("c_gamma: grid_n must be >= 8");
  const TimeGrid grid = make_uniform_grid(1.0, static_cast<std::int64_t>(grid_n));
  const EnergyBasis basis(grid_n);
  const std::vector<double> zero{0.0};
  const double inv2g = 1.0 / (2.0 * gamma);

  // f(c) = -||h(c)||_{2g} / |c|, zero-homogeneous; |c| = ||h||_H.
  const Objective objective = [&](std::span<const double> c, std::span<double> grad) -> double {
    thread_local std::vector<double> nodes, vgrad;
    basis.to_nodes(c, 1, nodes);
    vgrad.assign(nodes.size(), 0.0);
    const double v = v_with_gradient(grid, 1, nodes, zero, zero, gamma, 0.0, vgrad);
    double cc = 0.0;
    for (double ci : c) cc += ci * ci;
    if (!(v > 0.0) || !(cc > 0.0)) return kInf;
    const double norm = std::pow(v, inv2g);
    const double len = std::sqrt(cc);
    const double dnorm = inv2g * norm / v;
    for (double& g : vgrad) g *= dnorm;
    basis.pull_back(vgrad, 1, grad);
    for (std::size_t i = 0; i < c.size(); ++i) {
      grad[i] = -(grad[i] / len - norm * c[i] / (len * len * len));
    }
    return -norm / len;
  };

  // Generic single-bump starts; none of them is the exact maximiser.
  std::vector<std::vector<double>> starts;
  for (int shape = 0; shape < 3; ++shape) {
    std::vector<double> nodes(grid.nodes(), 0.0);
    for (std::size_t i = 1; i < grid_n; ++i) {
      const double t = grid.times[i];
      nodes[i] = shape == 0 ? std::min(t, 1.0 - t)
               : shape == 1 ? t * (1.0 - t) * (1.0 - t)
                            : t * t * (1.0 - t);
    }
    auto c = basis.from_nodes(nodes, 1);
    double cc = 0.0;
    for (double ci : c) cc += ci * ci;
    for (double& ci : c) ci /= std::sqrt(cc);
    starts.push_back(std::move(c));
  }

  LbfgsOptions lb;
  lb.grad_tolerance = 1e-10;
  CGammaResult best;
  double best_value = -kInf;
  for (const auto& start : starts) {
    LbfgsResult fit = minimize_lbfgs(objective, start, lb);
    if (-fit.value > best_value) {
      best_value = -fit.value;
      double cc = 0.0;
      for (double ci : fit.x) cc += ci * ci;
      for (double& ci : fit.x) ci /= std::sqrt(cc);
      std::vector<double> nodes;
      basis.to_nodes(fit.x, 1, nodes);
      best.value = best_value;
      best.maximizer = DiscretePath(grid, 1, std::move(nodes), PathKind::cameron_martin);
      best.iterations = fit.iterations;
      best.converged = fit.converged;
    }
  }
  return best;
}

double c_gamma(double gamma, std::size_t grid_n) { return c_gamma_solve(gamma, grid_n).value; }

double c_gamma_upper_bound(double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("c_gamma_upper_bound: gamma must be positive");
  return std::pow(std::beta(1.0 + gamma, 1.0 + gamma), 1.0 / (2.0 * gamma));
}

double asymptotic_rate_constant(double gamma, double c_gamma_value) {
  if (!(gamma > 0.0) || !(c_gamma_value > 0.0)) {
    throw std::invalid_argument("asymptotic_rate_constant: inputs must be positive");
  }
  return std::pow(c_gamma_value, -2.0 * gamma / (1.0 + gamma)) * (1.0 + gamma) *
         std::pow(gamma, -gamma / (1.0 + gamma));
}

double phi_value(const PhiProblem& problem, const DiscretePath& h, double eps) {
  check_problem(problem);
  check_unit_path(problem, h);
  const double v = v_with_gradient(h.grid(), h.dim(), h.values(), problem.x, problem.xi,
                                   problem.gamma, eps, std::span<double>{});
  const double energy = energy_nodes(h.grid(), h.dim(), h.values());
  if (problem.a == 0.0) return energy;
  return v > 0.0 ? problem.a * problem.a / v + energy : kInf;
}

std::vector<double> phi_gradient(const PhiProblem& problem, const DiscretePath& h, double eps) {
  check_problem(problem);
  check_unit_path(problem, h);
  const auto& grid = h.grid();
  const std::size_t dim = h.dim();
  const auto values = h.values();
  std::vector<double> grad(values.size(), 0.0);
  const double v = v_with_gradient(grid, dim, values, problem.x, problem.xi, problem.gamma, eps, grad);
  const double factor = problem.a == 0.0 ? 0.0 : -problem.a * problem.a / (v * v);
  for (double& g : grad) g *= factor;
  const std::size_t n = grid.intervals();
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t k = 0; k < dim; ++k) {
      const double left = (values[i * dim + k] - values[(i - 1) * dim + k]) / grid.step(i - 1);
      const double right = (values[(i + 1) * dim + k] - values[i * dim + k]) / grid.step(i);
      grad[i * dim + k] += 2.0 * (left - right);
    }
  }
  return grad;
}

RateResult minimize_phi(const PhiProblem& problem, const RateOptions& options) {
  check_problem(problem);
  const std::size_t dim = problem.x.size();
  const TimeGrid grid = make_uniform_grid(1.0, static_cast<std::int64_t>(problem.grid_n));

  RateResult result;
  result.minimizer = DiscretePath(grid, dim, PathKind::cameron_martin);
  if (problem.a == 0.0) {
    result.converged = true;
    return result;
  }

  PhiProblem unit = problem;
  double value_scale = 1.0, path_scale = 1.0;
  if (options.rescale && problem.a != 1.0) {
    // Phi_{x,xi,a}(a^alpha h) = a^{2 alpha} Phi_{a^-alpha x, a^-alpha xi, 1}(h)
    const double alpha = 1.0 / (1.0 + problem.gamma);
    path_scale = std::pow(problem.a, alpha);
    value_scale = path_scale * path_scale;
    for (double& v : unit.x) v /= path_scale;
    for (double& v : unit.xi) v /= path_scale;
    unit.a = 1.0;
  }

  const EnergyBasis basis(problem.grid_n);
  StartOutcome best = solve_direct(unit, options, basis, grid);
  if (!std::isfinite(best.phi)) {
    result.m = kInf;
    return result;
  }
  std::vector<double> nodes;
  basis.to_nodes(best.fit.x, dim, nodes);
  for (double& v : nodes) v *= path_scale;
  result.minimizer = DiscretePath(grid, dim, std::move(nodes), PathKind::cameron_martin);
  result.m = value_scale * best.phi;
  result.iterations = best.fit.iterations;
  result.grad_norm = best.fit.grad_norm;
  result.converged = best.fit.converged;
  return result;
}

}  // namespace grushin
