#include "grushin/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace grushin {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

struct Pair {
  std::vector<double> s, y;
  double rho;
};

void two_loop(const std::deque<Pair>& memory, std::span<const double> grad,
              std::vector<double>& direction) {
  direction.assign(grad.begin(), grad.end());
  std::vector<double> alpha(memory.size());
  for (std::size_t j = memory.size(); j-- > 0;) {
    const auto& m = memory[j];
    alpha[j] = m.rho * dot(m.s, direction);
    for (std::size_t i = 0; i < direction.size(); ++i) direction[i] -= alpha[j] * m.y[i];
  }
  if (!memory.empty()) {
    const auto& last = memory.back();
    const double scale = dot(last.s, last.y) / dot(last.y, last.y);
    for (double& v : direction) v *= scale;
  }
  for (std::size_t j = 0; j < memory.size(); ++j) {
    const auto& m = memory[j];
    const double beta = m.rho * dot(m.y, direction);
    for (std::size_t i = 0; i < direction.size(); ++i) direction[i] += (alpha[j] - beta) * m.s[i];
  }
  for (double& v : direction) v = -v;
}

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& objective, std::vector<double> x0,
                           const LbfgsOptions& options) {
  const std::size_t n = x0.size();
  LbfgsResult result;
  result.x = std::move(x0);
  std::vector<double> grad(n), trial(n), trial_grad(n), direction(n);
  double f = objective(result.x, grad);
  if (!std::isfinite(f)) {
    result.value = f;
    return result;
  }
  std::deque<Pair> memory;
  auto gnorm = [&](const std::vector<double>& g) { return std::sqrt(dot(g, g)); };

  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    result.grad_norm = gnorm(grad);
    if (result.grad_norm <= options.grad_tolerance * std::max(1.0, std::abs(f))) {
      result.converged = true;
      break;
    }
    two_loop(memory, grad, direction);
    double slope = dot(grad, direction);
    if (!(slope < 0.0)) {
      memory.clear();
      for (std::size_t i = 0; i < n; ++i) direction[i] = -grad[i];
      slope = -result.grad_norm * result.grad_norm;
    }

    // First step (no curvature information yet) is capped at unit length.
    double step = memory.empty() ? std::min(1.0, 1.0 / result.grad_norm) : 1.0;
    // Admit increases at the rounding level of f so the search does not stall
    // once the decrease |g|^2 / L drops below machine precision.
    const double noise = 8.0 * std::numeric_limits<double>::epsilon() * std::abs(f);
    bool accepted = false;
    double f_trial = f;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = result.x[i] + step * direction[i];
      f_trial = objective(trial, trial_grad);
      if (std::isfinite(f_trial) && f_trial <= f + 1e-4 * step * slope + noise) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!memory.empty()) {
        memory.clear();
        continue;
      }
      break;
    }

    Pair pair{std::vector<double>(n), std::vector<double>(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      pair.s[i] = trial[i] - result.x[i];
      pair.y[i] = trial_grad[i] - grad[i];
    }
    const double sy = dot(pair.s, pair.y);
    result.x.swap(trial);
    grad.swap(trial_grad);
    f = f_trial;
    result.iterations = it + 1;
    if (sy > 1e-300) {
      pair.rho = 1.0 / sy;
      memory.push_back(std::move(pair));
      if (memory.size() > options.memory) memory.pop_front();
    }
  }
  result.value = f;
  result.grad_norm = gnorm(grad);
  if (result.grad_norm <= options.grad_tolerance * std::max(1.0, std::abs(f))) {
    result.converged = true;
  }
  return result;
}

}  // namespace grushin
