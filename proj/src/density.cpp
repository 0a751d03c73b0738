#include "grushin/density.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace grushin {

namespace {

double squared_norm_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

void check_point(const GrushinParams& params, const EndPoint& p, const char* which) {
  if (p.x.size() != params.d) {
    throw std::invalid_argument(std::string(which) + ".x must have d = " +
                                std::to_string(params.d) + " components");
  }
  if (p.y.size() != params.d_prime) {
    throw std::invalid_argument(std::string(which) + ".y must have dprime = " +
                                std::to_string(params.d_prime) + " components");
  }
}

void check_common(const GrushinParams& params, double horizon, const McOptions& options) {
  params.validate();
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("T must be positive, got " + std::to_string(horizon));
  }
  if (options.n_samples < 1) throw std::invalid_argument("samples must be >= 1");
  if (options.grid_n < 1) throw std::invalid_argument("grid must be >= 1");
}

struct ChunkResult {
  LogMeanAccumulator acc;
  void merge(const ChunkResult& other) { acc.merge(other.acc); }
};

DensityEstimate finish(const LogMeanAccumulator& acc, double log_prefactor) {
  DensityEstimate est;
  est.n_samples = acc.count();
  est.underflow = !(acc.log_mean() > -std::numeric_limits<double>::infinity());
  est.log_mean = log_prefactor + acc.log_mean();
  est.relative_stderr = acc.relative_stderr();
  est.mean = est.underflow ? 0.0 : std::exp(est.log_mean);
  est.std_error = est.mean * est.relative_stderr;
  est.tail_ratio = est.underflow ? 0.0 : std::exp(acc.log_max() - acc.log_mean());
  return est;
}

double checked_log(double v) {
  if (!(v > 0.0)) {
    throw std::domain_error("path functional vanished on the grid; refine grid_n");
  }
  return std::log(v);
}

}  // namespace

const char* to_string(DensityFormula formula) {
  return formula == DensityFormula::horizon_t ? "horizon-T" : "unit-horizon";
}

DensityEstimate estimate_density(const GrushinParams& params, double horizon,
                                 const EndPoint& from, const EndPoint& to,
                                 const McOptions& options, DensityFormula formula,
                                 const DiscretePath* shift) {
  check_common(params, horizon, options);
  check_point(params, from, "from");
  check_point(params, to, "to");

  const bool unit = formula == DensityFormula::unit_horizon;
  const double sample_horizon = unit ? 1.0 : horizon;
  const TimeGrid grid = make_uniform_grid(sample_horizon, static_cast<std::int64_t>(options.grid_n));
  if (shift != nullptr) {
    if (shift->grid() != grid) {
      throw std::invalid_argument("shift grid does not match the sampling grid");
    }
    if (shift->kind() != PathKind::cameron_martin || shift->dim() != params.d) {
      throw std::invalid_argument("shift must be a d-dimensional Cameron-Martin path");
    }
  }

  const std::size_t d = params.d;
  const double half_dp = 0.5 * static_cast<double>(params.d_prime);
  const double gap2 = squared_norm_diff(to.y, from.y);
  const double path_scale = unit ? std::sqrt(horizon) : 1.0;
  // Unit horizon: exp(-|eta-y|^2 / (2 T v-hat)); horizon T: exp(-|eta-y|^2 / (2 v)).
  const double gap_coeff = unit ? 0.5 * gap2 / horizon : 0.5 * gap2;
  const double shift_energy =
      shift ? cm_inner(grid, d, shift->values(), shift->values()) : 0.0;

  auto chunk = [&](const RngStream& rng, std::size_t, std::size_t count) {
    ChunkResult out;
    Engine engine = make_engine(rng);
    std::normal_distribution<double> normal;
    std::vector<double> beta(grid.nodes() * d);
    std::vector<double> moved(grid.nodes() * d);
    for (std::size_t s = 0; s < count; ++s) {
      fill_bridge(grid, d, engine, normal, beta);
      double log_weight = 0.0;
      std::span<const double> z = beta;
      if (shift) {
        const auto sv = shift->values();
        for (std::size_t i = 0; i < moved.size(); ++i) moved[i] = beta[i] + sv[i];
        log_weight = -cm_inner(grid, d, sv, beta) - 0.5 * shift_energy;
        z = moved;
      }
      const double v = v_integral(grid, d, z, from.x, to.x, params.gamma, path_scale);
      out.acc.add(-half_dp * checked_log(v) - gap_coeff / v + log_weight);
    }
    return out;
  };
  const auto total = run_chunked<ChunkResult>(options.n_samples, options.rng, options.workers, chunk);

  const double dx2 = squared_norm_diff(to.x, from.x);
  const double dd = static_cast<double>(params.d + params.d_prime);
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  const double log_prefactor =
      unit ? -0.5 * dd * (log_2pi + std::log(horizon)) - 0.5 * dx2 / horizon
           : -0.5 * dd * log_2pi - 0.5 * static_cast<double>(params.d) * std::log(horizon) -
                 0.5 * dx2 / horizon;

  DensityEstimate est = finish(total.acc, log_prefactor);
  est.horizon = horizon;
  est.from = from;
  est.to = to;
  est.formula = formula;
  return est;
}

DiscretePath importance_shift(const DiscretePath& h, double horizon, DensityFormula formula,
                              std::size_t grid_n) {
  if (h.grid().horizon != 1.0) {
    throw std::invalid_argument("importance_shift: h must live on the unit horizon");
  }
  if (!(horizon > 0.0)) throw std::invalid_argument("importance_shift: T must be positive");
  const TimeGrid unit_grid = make_uniform_grid(1.0, static_cast<std::int64_t>(grid_n));
  DiscretePath on_unit = resample(h, unit_grid);
  if (formula == DensityFormula::unit_horizon) {
    // sqrt(T) (beta + s) ~ h
    return on_unit.scaled(1.0 / std::sqrt(horizon));
  }
  // A horizon-T bridge is sqrt(T) beta-hat(t / T), so s(t) = h(t / T).
  const TimeGrid grid = make_uniform_grid(horizon, static_cast<std::int64_t>(grid_n));
  std::vector<double> values(on_unit.values().begin(), on_unit.values().end());
  return DiscretePath(grid, h.dim(), std::move(values), PathKind::cameron_martin);
}

std::vector<DensityEstimate> conditional_density_curve(
    const GrushinParams& params, double horizon, const std::vector<double>& x,
    const std::vector<double>& xi, const std::vector<std::vector<double>>& etas,
    const McOptions& options) {
  check_common(params, horizon, options);
  if (x.size() != params.d || xi.size() != params.d) {
    throw std::invalid_argument("x and xi must have d components");
  }
  for (const auto& eta : etas) {
    if (eta.size() != params.d_prime) {
      throw std::invalid_argument("eta must have dprime components");
    }
  }
  const TimeGrid grid = make_uniform_grid(horizon, static_cast<std::int64_t>(options.grid_n));
  const std::size_t d = params.d;
  const double half_dp = 0.5 * static_cast<double>(params.d_prime);
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  std::vector<double> eta2(etas.size());
  for (std::size_t j = 0; j < etas.size(); ++j) {
    for (double e : etas[j]) eta2[j] += e * e;
  }

  struct CurveResult {
    std::vector<LogMeanAccumulator> acc;
    void merge(const CurveResult& other) {
      if (acc.empty()) acc.resize(other.acc.size());
      for (std::size_t j = 0; j < acc.size(); ++j) acc[j].merge(other.acc[j]);
    }
  };

  auto chunk = [&](const RngStream& rng, std::size_t, std::size_t count) {
    CurveResult out;
    out.acc.resize(etas.size());
    Engine engine = make_engine(rng);
    std::normal_distribution<double> normal;
    std::vector<double> beta(grid.nodes() * d);
    for (std::size_t s = 0; s < count; ++s) {
      fill_bridge(grid, d, engine, normal, beta);
      const double v = v_integral(grid, d, beta, x, xi, params.gamma);
      const double base = -half_dp * (log_2pi + checked_log(v));
      for (std::size_t j = 0; j < etas.size(); ++j) out.acc[j].add(base - 0.5 * eta2[j] / v);
    }
    return out;
  };
  const auto total = run_chunked<CurveResult>(options.n_samples, options.rng, options.workers, chunk);

  std::vector<DensityEstimate> out;
  out.reserve(etas.size());
  for (std::size_t j = 0; j < etas.size(); ++j) {
    DensityEstimate est = finish(total.acc[j], 0.0);
    est.horizon = horizon;
    est.from = {x, std::vector<double>(params.d_prime, 0.0)};
    est.to = {xi, etas[j]};
    out.push_back(std::move(est));
  }
  return out;
}

DensityEstimate conditional_density(const GrushinParams& params, double horizon,
                                    const std::vector<double>& x, const std::vector<double>& xi,
                                    const std::vector<double>& eta, const McOptions& options) {
  return conditional_density_curve(params, horizon, x, xi, {eta}, options).front();
}

MomentAccumulator functional_moments(const GrushinParams& params, double horizon,
                                     const std::vector<double>& x, const std::vector<double>& xi,
                                     const McOptions& options) {
  check_common(params, horizon, options);
  const TimeGrid grid = make_uniform_grid(horizon, static_cast<std::int64_t>(options.grid_n));
  const std::size_t d = params.d;
  struct Moments {
    MomentAccumulator acc;
    void merge(const Moments& o) { acc.merge(o.acc); }
  };
  auto chunk = [&](const RngStream& rng, std::size_t, std::size_t count) {
    Moments out;
    Engine engine = make_engine(rng);
    std::normal_distribution<double> normal;
    std::vector<double> beta(grid.nodes() * d);
    for (std::size_t s = 0; s < count; ++s) {
      fill_bridge(grid, d, engine, normal, beta);
      out.acc.add(v_integral(grid, d, beta, x, xi, params.gamma));
    }
    return out;
  };
  return run_chunked<Moments>(options.n_samples, options.rng, options.workers, chunk).acc;
}

DensityEstimate on_diagonal_constant(const GrushinParams& params, const McOptions& options) {
  check_common(params, 1.0, options);
  const TimeGrid grid = make_uniform_grid(1.0, static_cast<std::int64_t>(options.grid_n));
  const std::size_t d = params.d;
  const std::vector<double> origin(d, 0.0);
  const double half_dp = 0.5 * static_cast<double>(params.d_prime);

  auto chunk = [&](const RngStream& rng, std::size_t, std::size_t count) {
    ChunkResult out;
    Engine engine = make_engine(rng);
    std::normal_distribution<double> normal;
    std::vector<double> beta(grid.nodes() * d);
    for (std::size_t s = 0; s < count; ++s) {
      fill_bridge(grid, d, engine, normal, beta);
      out.acc.add(-half_dp * checked_log(v_integral(grid, d, beta, origin, origin, params.gamma)));
    }
    return out;
  };
  const auto total = run_chunked<ChunkResult>(options.n_samples, options.rng, options.workers, chunk);
  const double dd = static_cast<double>(params.d + params.d_prime);
  DensityEstimate est = finish(total.acc, -0.5 * dd * std::log(2.0 * std::numbers::pi));
  est.horizon = 1.0;
  est.from = {origin, std::vector<double>(params.d_prime, 0.0)};
  est.to = est.from;
  est.formula = DensityFormula::unit_horizon;
  return est;
}

}  // namespace grushin
