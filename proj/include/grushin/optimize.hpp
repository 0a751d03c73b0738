#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace grushin {

/// Objective returning f(x) and writing the gradient into `grad`.
/// A non-finite value marks x as outside the domain.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LbfgsOptions {
  std::size_t max_iterations = 10000;
  /// Stop once |grad| <= grad_tolerance * max(1, |f|).
  double grad_tolerance = 1e-8;
  std::size_t memory = 10;
};

struct LbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Limited-memory BFGS with backtracking (Armijo) line search. Falls back to
/// steepest descent when the quasi-Newton direction fails to descend.
LbfgsResult minimize_lbfgs(const Objective& objective, std::vector<double> x0,
                           const LbfgsOptions& options = {});

}  // namespace grushin
