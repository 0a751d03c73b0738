#include "grushin/asymptotics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>

namespace grushin {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Rows of a sweep draw from disjoint stream ranges.
constexpr std::uint64_t kRowStride = std::uint64_t{1} << 32;

std::vector<double> sorted_horizons(const std::vector<double>& horizons) {
  if (horizons.empty()) throw std::invalid_argument("T_list must not be empty");
  for (double t : horizons) {
    if (!(t > 0.0) || !std::isfinite(t)) {
      throw std::invalid_argument("T_list entries must be positive, got " + std::to_string(t));
    }
  }
  std::vector<double> out = horizons;
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

McOptions row_options(const McOptions& options, std::size_t row) {
  McOptions out = options;
  out.rng = options.rng.substream(kRowStride * (row + 1));
  return out;
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return s;
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

struct AffineFit {
  double intercept = kNaN;
  double slope = kNaN;
  double rms_residual = kNaN;
};

AffineFit fit_affine(const std::vector<double>& t, const std::vector<double>& y) {
  AffineFit fit;
  const std::size_t n = t.size();
  if (n == 0) return fit;
  if (n == 1) {
    fit.intercept = y[0];
    fit.slope = 0.0;
    fit.rms_residual = 0.0;
    return fit;
  }
  double mt = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mt += t[i];
    my += y[i];
  }
  mt /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    stt += (t[i] - mt) * (t[i] - mt);
    sty += (t[i] - mt) * (y[i] - my);
  }
  fit.slope = sty / stt;
  fit.intercept = my - fit.slope * mt;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.intercept - fit.slope * t[i];
    ss += r * r;
  }
  fit.rms_residual = std::sqrt(ss / static_cast<double>(n));
  return fit;
}

struct Counts {
  std::size_t n = 0;
  std::vector<std::size_t> hits;
  void merge(const Counts& other) {
    if (hits.empty()) hits.assign(other.hits.size(), 0);
    for (std::size_t j = 0; j < other.hits.size(); ++j) hits[j] += other.hits[j];
    n += other.n;
  }
};

struct Samples {
  std::vector<double> values;
  void merge(const Samples& other) {
    values.insert(values.end(), other.values.begin(), other.values.end());
  }
};

}  // namespace

const char* to_string(FitMethod method) {
  switch (method) {
    case FitMethod::final_row: return "final-row";
    case FitMethod::weighted_mean: return "weighted-mean";
    case FitMethod::affine_extrapolation: return "affine-extrapolation";
  }
  return "unknown";
}

const char* to_string(ShiftPolicy policy) {
  switch (policy) {
    case ShiftPolicy::off: return "off";
    case ShiftPolicy::on: return "on";
    case ShiftPolicy::automatic: return "auto";
  }
  return "unknown";
}

ShiftPolicy parse_shift_policy(const std::string& text) {
  if (text == "off" || text == "false" || text == "0") return ShiftPolicy::off;
  if (text == "on" || text == "true" || text == "1") return ShiftPolicy::on;
  if (text == "auto") return ShiftPolicy::automatic;
  throw std::invalid_argument("shift must be one of on, off, auto; got '" + text + "'");
}

// ---------------------------------------------------------------------------
// On-diagonal
// ---------------------------------------------------------------------------

AsymptoticsReport on_diagonal_experiment(const GrushinParams& params, const std::vector<double>& x,
                                         const std::vector<double>& horizons,
                                         const McOptions& options) {
  params.validate();
  if (x.size() != params.d) throw std::invalid_argument("x must have d components");
  const auto ts = sorted_horizons(horizons);
  const double d = static_cast<double>(params.d), dp = static_cast<double>(params.d_prime);
  const bool degenerate = norm2(x) == 0.0;
  const double power = degenerate ? 0.5 * (d + (1.0 + params.gamma) * dp) : 0.5 * (d + dp);

  const EndPoint point{x, std::vector<double>(params.d_prime, 0.0)};
  AsymptoticsReport report;
  for (std::size_t j = 0; j < ts.size(); ++j) {
    const auto est = estimate_density(params, ts[j], point, point, row_options(options, j));
    AsymptoticsRow row;
    row.horizon = ts[j];
    const double scale = std::pow(ts[j], power);
    row.scaled_value = scale * est.mean;
    row.std_error = scale * est.std_error;
    row.tail_ratio = est.tail_ratio;
    row.flagged = est.underflow || !std::isfinite(row.scaled_value);
    report.rows.push_back(row);
  }

  const AsymptoticsRow& last = report.rows.back();
  if (degenerate) {
    const auto constant = on_diagonal_constant(params, row_options(options, ts.size()));
    report.theory_value = constant.mean;
    report.theory_std_error = constant.std_error;
    double sw = 0.0, swv = 0.0;
    for (const auto& row : report.rows) {
      if (row.flagged || !(row.std_error > 0.0)) continue;
      const double w = 1.0 / (row.std_error * row.std_error);
      sw += w;
      swv += w * row.scaled_value;
    }
    report.fitted_limit = sw > 0.0 ? swv / sw : last.scaled_value;
    report.fit_method = FitMethod::weighted_mean;
    double chi2 = 0.0;
    for (const auto& row : report.rows) {
      if (row.flagged || !(row.std_error > 0.0)) continue;
      const double z = (row.scaled_value - report.fitted_limit) / row.std_error;
      chi2 += z * z;
    }
    report.fit_residual = std::sqrt(chi2 / static_cast<double>(report.rows.size()));
  } else {
    const double xg = std::pow(std::sqrt(norm2(x)), -params.gamma * dp);
    const double two_pi = 2.0 * std::numbers::pi;
    report.theory_value = std::pow(two_pi, -0.5 * (d + dp)) * xg;
    report.alt_theory_value = std::pow(two_pi, -0.5 * d) * xg;
    report.fitted_limit = last.scaled_value;
    report.fit_method = FitMethod::final_row;
    report.fit_residual = 0.0;
  }
  report.fitted_limit_raw = report.fitted_limit;
  const double sigma =
      std::sqrt(last.std_error * last.std_error + report.theory_std_error * report.theory_std_error);
  report.passes = !last.flagged && std::abs(last.scaled_value - report.theory_value) <=
                                       3.0 * sigma + 0.05 * std::abs(report.theory_value);
  return report;
}

// ---------------------------------------------------------------------------
// Off-diagonal
// ---------------------------------------------------------------------------

AsymptoticsReport off_diagonal_experiment(const GrushinParams& params, const EndPoint& from,
                                          const EndPoint& to, const std::vector<double>& horizons,
                                          const McOptions& options,
                                          const OffDiagonalOptions& off) {
  params.validate();
  if (from.x.size() != params.d || to.x.size() != params.d || from.y.size() != params.d_prime ||
      to.y.size() != params.d_prime) {
    throw std::invalid_argument("off-diagonal endpoints must be in R^d x R^dprime");
  }
  if (norm2(from.x) == 0.0 && norm2(to.x) == 0.0) {
    throw std::invalid_argument(
        "off-diagonal experiment needs (x, xi) != (0, 0); use the degenerate driver");
  }
  const auto ts = sorted_horizons(horizons);
  const double gap = distance(to.y, from.y);
  const double dx2 = std::pow(distance(to.x, from.x), 2);

  const PhiProblem problem{from.x, to.x, gap, params.gamma, off.var_grid};
  const RateResult rate = minimize_phi(problem, off.rate);
  AsymptoticsReport report;
  report.theory_value = -0.5 * (dx2 + rate.m);

  const double half_dim = 0.5 * static_cast<double>(params.d + params.d_prime);
  std::vector<double> fit_t, fit_y, fit_raw;
  for (std::size_t j = 0; j < ts.size(); ++j) {
    const double t = ts[j];
    const bool use_shift =
        gap > 0.0 && (off.shift == ShiftPolicy::on ||
                      (off.shift == ShiftPolicy::automatic && t < off.shift_below));
    DensityEstimate est;
    if (use_shift) {
      const DiscretePath shift =
          importance_shift(rate.minimizer, t, DensityFormula::unit_horizon, options.grid_n);
      est = estimate_density(params, t, from, to, row_options(options, j),
                             DensityFormula::unit_horizon, &shift);
    } else {
      est = estimate_density(params, t, from, to, row_options(options, j),
                             DensityFormula::unit_horizon);
    }
    AsymptoticsRow row;
    row.horizon = t;
    row.scaled_value = t * est.log_mean;
    row.std_error = t * est.relative_stderr;
    row.tail_ratio = est.tail_ratio;
    row.flagged = est.underflow || !std::isfinite(row.scaled_value);
    report.rows.push_back(row);
  }
  // Three smallest unflagged horizons.
  for (std::size_t j = report.rows.size(); j-- > 0 && fit_t.size() < 3;) {
    const auto& row = report.rows[j];
    if (row.flagged) continue;
    fit_t.push_back(row.horizon);
    fit_raw.push_back(row.scaled_value);
    fit_y.push_back(row.scaled_value +
                    half_dim * row.horizon * std::log(2.0 * std::numbers::pi * row.horizon));
  }
  const AffineFit corrected = fit_affine(fit_t, fit_y);
  const AffineFit raw = fit_affine(fit_t, fit_raw);
  report.fitted_limit = corrected.intercept;
  report.fitted_limit_raw = raw.intercept;
  report.fit_residual = corrected.rms_residual;
  report.fit_method = FitMethod::affine_extrapolation;
  report.passes = std::isfinite(report.fitted_limit) &&
                  std::abs(report.fitted_limit - report.theory_value) <=
                      off.relative_tolerance * std::abs(report.theory_value);
  return report;
}

LargeGapConstant large_gap_constant(double gamma, std::size_t grid_n) {
  LargeGapConstant out;
  out.rate_constant = asymptotic_rate_constant(gamma, c_gamma(gamma, grid_n));
  out.signed_limit = -0.5 * out.rate_constant;
  out.display_limit = out.rate_constant;
  return out;
}

// ---------------------------------------------------------------------------
// Degenerate axis
// ---------------------------------------------------------------------------

double eps_of_delta(double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  return std::sqrt(delta / (8.0 * 192.0 * 192.0));
}

DegenerateBounds degenerate_bounds(const GrushinParams& params, double eta_minus_y,
                                   double delta0) {
  params.validate();
  if (!(eta_minus_y >= 0.0)) throw std::invalid_argument("|eta - y| must be nonnegative");
  if (!(delta0 > 0.0)) throw std::invalid_argument("delta0 must be positive");
  const double g = params.gamma;
  const double e = 1.0 + g;
  DegenerateBounds b;
  b.delta0_est = delta0;
  b.eps_delta0 = eps_of_delta(delta0);
  const double small = std::min(std::pow(2.0 * b.eps_delta0, 6.0), 1.0);
  b.lower_const = -std::pow(2.0, 3.0 * g / e) * e * std::pow(g, -g / e) * std::pow(small, -1.0 / e);
  b.upper_const =
      -std::pow(2.0, -(1.0 - g) / e) * std::pow(static_cast<double>(params.d), -g / e);
  const double scale = std::pow(eta_minus_y, 2.0 / e);
  b.lower_bound = b.lower_const * scale;
  b.upper_bound = b.upper_const * scale;
  if (b.lower_const > b.upper_const) {
    throw std::logic_error("degenerate bounds: lower constant exceeds upper constant");
  }
  return b;
}

DegenerateReport degenerate_experiment(const GrushinParams& params, double eta_minus_y,
                                       double delta0, const std::vector<double>& horizons,
                                       const McOptions& options, std::size_t var_grid) {
  DegenerateReport out;
  out.bounds = degenerate_bounds(params, eta_minus_y, delta0);
  if (!(eta_minus_y > 0.0)) throw std::invalid_argument("|eta - y| must be positive");
  const auto ts = sorted_horizons(horizons);

  const std::vector<double> origin(params.d, 0.0);
  const PhiProblem problem{origin, origin, eta_minus_y, params.gamma, var_grid};
  const RateResult rate = minimize_phi(problem);
  EndPoint from{origin, std::vector<double>(params.d_prime, 0.0)};
  EndPoint to = from;
  to.y[0] = eta_minus_y;

  AsymptoticsReport& report = out.trend;
  report.theory_value = -0.5 * rate.m;
  for (std::size_t j = 0; j < ts.size(); ++j) {
    const DiscretePath shift =
        importance_shift(rate.minimizer, ts[j], DensityFormula::unit_horizon, options.grid_n);
    const auto est = estimate_density(params, ts[j], from, to, row_options(options, j),
                                      DensityFormula::unit_horizon, &shift);
    AsymptoticsRow row;
    row.horizon = ts[j];
    row.scaled_value = ts[j] * est.log_mean;
    row.std_error = ts[j] * est.relative_stderr;
    row.tail_ratio = est.tail_ratio;
    row.flagged = est.underflow || !std::isfinite(row.scaled_value);
    report.rows.push_back(row);
  }
  const auto& last = report.rows.back();
  report.fitted_limit = last.scaled_value;
  report.fitted_limit_raw = last.scaled_value;
  report.fit_method = FitMethod::final_row;
  report.passes = !last.flagged && last.scaled_value >= 1.2 * out.bounds.lower_bound &&
                  last.scaled_value <= 0.8 * out.bounds.upper_bound;
  return out;
}

std::vector<double> besov_samples(std::size_t dim, const McOptions& options) {
  if (dim < 1) throw std::invalid_argument("d must be >= 1");
  const TimeGrid grid = make_uniform_grid(1.0, static_cast<std::int64_t>(options.grid_n));
  auto chunk = [&](const RngStream& rng, std::size_t, std::size_t count) {
    Samples out;
    out.values.reserve(count);
    Engine engine = make_engine(rng);
    std::normal_distribution<double> normal;
    std::vector<double> beta(grid.nodes() * dim);
    for (std::size_t s = 0; s < count; ++s) {
      fill_bridge(grid, dim, engine, normal, beta);
      out.values.push_back(besov_norm(grid, dim, beta));
    }
    return out;
  };
  return run_chunked<Samples>(options.n_samples, options.rng, options.workers, chunk).values;
}

Delta0Estimate fit_delta0(std::vector<double> samples) {
  const std::size_t n = samples.size();
  if (n < 10000) {
    throw std::invalid_argument("delta0 estimate needs at least 1e4 samples, got " +
                                std::to_string(n));
  }
  std::sort(samples.begin(), samples.end(), std::greater<>());
  std::vector<double> b2, y;
  std::size_t last_k = 0;
  constexpr int kLevels = 21;
  for (int j = 0; j < kLevels; ++j) {
    const double q = std::pow(10.0, -2.0 - 2.0 * j / (kLevels - 1));
    const auto k = static_cast<std::size_t>(std::max(1.0, std::round(q * static_cast<double>(n))));
    if (k == last_k) continue;
    last_k = k;
    b2.push_back(samples[k - 1] * samples[k - 1]);
    y.push_back(-std::log(static_cast<double>(k) / static_cast<double>(n)));
  }
  const AffineFit fit = fit_affine(b2, y);
  Delta0Estimate out;
  out.delta = fit.slope;
  out.intercept = fit.intercept;
  out.n_tail = static_cast<std::size_t>(std::round(0.01 * static_cast<double>(n)));
  out.low_confidence = 1e-4 * static_cast<double>(n) < 10.0 || b2.size() < 3 || !(out.delta > 0.0);
  return out;
}

Delta0Estimate estimate_delta0(std::size_t dim, const McOptions& options) {
  if (options.n_samples < 10000) {
    throw std::invalid_argument("delta0 estimate needs samples >= 10000");
  }
  return fit_delta0(besov_samples(dim, options));
}

// ---------------------------------------------------------------------------
// Bridge maximum
// ---------------------------------------------------------------------------

Interval wilson_interval(std::size_t hits, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(hits) / nn;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * nn)) / (1.0 + z2 / nn);
  const double half = z / (1.0 + z2 / nn) * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

double bridge_max_tail(double a) {
  if (!(a > 0.0)) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * a * a);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-300) break;
  }
  return std::min(1.0, 2.0 * sum);
}

double small_ball_bound(std::size_t dim, double horizon, double zeta_norm, double a) {
  if (!(a > 0.0) || !(horizon > 0.0)) {
    throw std::invalid_argument("small_ball_bound: a and T must be positive");
  }
  const double d = static_cast<double>(dim);
  const double u = std::numbers::pi * std::numbers::pi * horizon / (8.0 * a * a);
  return std::exp(zeta_norm * zeta_norm / (2.0 * horizon)) *
         std::pow(2.0 * std::numbers::pi * horizon, 0.5 * d) / std::pow(a, d) *
         std::exp(-d * u) / std::pow(1.0 - std::exp(-u), d);
}

MaxProbReport max_prob_check(std::size_t dim, double horizon, const std::vector<double>& zeta,
                             const std::vector<double>& a_list, const McOptions& options) {
  if (dim < 1) throw std::invalid_argument("d must be >= 1");
  if (zeta.size() != dim) throw std::invalid_argument("zeta must have d components");
  if (!(horizon > 0.0)) throw std::invalid_argument("T must be positive");
  if (a_list.empty()) throw std::invalid_argument("a_list must not be empty");
  for (double a : a_list) {
    if (!(a > 0.0)) throw std::invalid_argument("a_list entries must be positive");
  }
  const double root_d = std::sqrt(static_cast<double>(dim));
  std::vector<double> levels;
  for (double a : a_list) {
    levels.push_back(a);
    levels.push_back(2.0 * root_d * a);
  }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  auto level_index = [&](double v) {
    return static_cast<std::size_t>(std::lower_bound(levels.begin(), levels.end(), v) - levels.begin());
  };

  const TimeGrid grid = make_uniform_grid(horizon, static_cast<std::int64_t>(options.grid_n));
  const std::size_t n = grid.intervals();
  auto chunk = [&](const RngStream& rng, std::size_t, std::size_t count) {
    Counts out;
    out.hits.assign(levels.size(), 0);
    Engine engine = make_engine(rng);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::vector<double> z(grid.nodes() * dim);
    std::vector<double> r(grid.nodes());
    for (std::size_t s = 0; s < count; ++s) {
      fill_bridge(grid, dim, engine, normal, z);
      double node_max = 0.0;
      for (std::size_t i = 0; i <= n; ++i) {
        const double frac = grid.times[i] / horizon;
        double r2 = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
          z[i * dim + k] += frac * zeta[k];
          r2 += z[i * dim + k] * z[i * dim + k];
        }
        r[i] = std::sqrt(r2);
        node_max = std::max(node_max, r[i]);
      }
      const double u = uniform(engine);
      ++out.n;
      for (std::size_t j = 0; j < levels.size(); ++j) {
        const double level = levels[j];
        if (node_max >= level) {
          ++out.hits[j];
          continue;
        }
        // Survival of the level between nodes, given the node values.
        double log_survival = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double two_over_dt = 2.0 / grid.step(i);
          double p = 0.0;
          if (dim == 1) {
            const double up = two_over_dt * (level - z[i]) * (level - z[i + 1]);
            const double down = two_over_dt * (level + z[i]) * (level + z[i + 1]);
            if (up < 40.0) p += std::exp(-up);
            if (down < 40.0) p += std::exp(-down);
          } else {
            const double e = two_over_dt * (level - r[i]) * (level - r[i + 1]);
            if (e < 40.0) p = std::exp(-e);
          }
          if (p > 0.0) log_survival += std::log1p(-std::min(p, 1.0 - 1e-16));
        }
        if (u > std::exp(log_survival)) ++out.hits[j];
      }
    }
    return out;
  };
  const Counts total = run_chunked<Counts>(options.n_samples, options.rng, options.workers, chunk);

  const bool standard = horizon == 1.0 && std::all_of(zeta.begin(), zeta.end(), [](double v) { return v == 0.0; });
  const double zeta_norm = std::sqrt(norm2(zeta));
  const double d = static_cast<double>(dim);
  MaxProbReport report;
  report.passes = true;
  for (double a : a_list) {
    MaxProbRow row;
    row.a = a;
    row.n = total.n;
    const std::size_t hits = total.hits[level_index(a)];
    const std::size_t far = total.hits[level_index(2.0 * root_d * a)];
    const std::size_t band = hits - far;
    const double nn = static_cast<double>(total.n);
    row.p_ge = static_cast<double>(hits) / nn;
    row.p_band = static_cast<double>(band) / nn;
    row.p_le = 1.0 - row.p_ge;
    const Interval ge = wilson_interval(hits, total.n);
    const Interval bd = wilson_interval(band, total.n);
    const Interval le = wilson_interval(total.n - hits, total.n);
    row.ge_lo = ge.lo;
    row.ge_hi = ge.hi;
    row.band_lo = bd.lo;
    row.band_hi = bd.hi;
    row.le_lo = le.lo;
    row.le_hi = le.hi;
    row.upper_le = small_ball_bound(dim, horizon, zeta_norm, a);
    row.passes = row.le_lo <= row.upper_le;
    if (standard) {
      row.upper_ge = 2.0 * d * std::exp(-2.0 * a * a / d);
      row.lower_band = 2.0 * std::exp(-2.0 * a * a) * (1.0 - (d + 1.0) * std::exp(-6.0 * a * a));
      row.passes = row.passes && row.ge_lo <= row.upper_ge && row.band_hi >= row.lower_band;
      if (dim == 1) {
        row.exact_ge = bridge_max_tail(a);
        row.passes = row.passes && row.ge_lo <= row.exact_ge && row.exact_ge <= row.ge_hi;
      }
    } else {
      row.upper_ge = kNaN;
      row.lower_band = kNaN;
    }
    report.passes = report.passes && row.passes;
    report.rows.push_back(row);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Taylor expansion of f(a)
// ---------------------------------------------------------------------------

int taylor_order_cap(double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  if (gamma == std::floor(gamma)) return -1;
  return static_cast<int>(std::floor(gamma));
}

TaylorFit taylor_experiment(const GrushinParams& params, const std::vector<double>& x,
                            const std::vector<double>& xi, const std::vector<double>& a_list,
                            int max_order, const McOptions& options) {
  params.validate();
  if (x.size() != params.d || xi.size() != params.d) {
    throw std::invalid_argument("x and xi must have d components");
  }
  if (norm2(x) == 0.0 && norm2(xi) == 0.0) {
    throw std::invalid_argument("taylor experiment needs (x, xi) != (0, 0)");
  }
  const int cap = taylor_order_cap(params.gamma);
  if (cap >= 0 && max_order >= cap) {
    throw std::invalid_argument("max-order must be below m(gamma) = " + std::to_string(cap) +
                                " for gamma = " + std::to_string(params.gamma));
  }
  if (max_order < 2) throw std::invalid_argument("max-order must be >= 2");
  const std::size_t n_coef = static_cast<std::size_t>(max_order / 2);
  if (a_list.size() < n_coef) {
    throw std::invalid_argument("need at least max-order / 2 values in a_list");
  }
  for (double a : a_list) {
    if (!(a >= 0.0)) throw std::invalid_argument("a_list entries must be nonnegative");
  }

  const TimeGrid grid = make_uniform_grid(1.0, static_cast<std::int64_t>(options.grid_n));
  const std::size_t d = params.d;
  const double half_dp = 0.5 * static_cast<double>(params.d_prime);
  const std::vector<double> zero(grid.nodes() * d, 0.0);
  const double v0 = v_integral(grid, d, zero, x, xi, params.gamma);
  TaylorFit fit;
  fit.f0_exact = std::pow(v0, -half_dp);
  fit.max_order = max_order;

  // Least-squares map from (f(a_j) - f0)_j to the even coefficients.
  const std::size_t m = a_list.size();
  Eigen::MatrixXd design(m, n_coef);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < n_coef; ++k)
      design(j, k) = std::pow(a_list[j], 2.0 * static_cast<double>(k + 1));
  const Eigen::MatrixXd solve =
      design.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(m, m));
  if (design.colPivHouseholderQr().rank() < static_cast<Eigen::Index>(n_coef)) {
    throw std::invalid_argument("a_list does not determine the even coefficients");
  }

  struct Acc {
    std::vector<MomentAccumulator> plus, minus, coef;
    void merge(const Acc& o) {
      if (plus.empty()) {
        plus.resize(o.plus.size());
        minus.resize(o.minus.size());
        coef.resize(o.coef.size());
      }
      for (std::size_t j = 0; j < plus.size(); ++j) {
        plus[j].merge(o.plus[j]);
        minus[j].merge(o.minus[j]);
      }
      for (std::size_t k = 0; k < coef.size(); ++k) coef[k].merge(o.coef[k]);
    }
  };
  auto chunk = [&](const RngStream& rng, std::size_t, std::size_t count) {
    Acc out;
    out.plus.resize(m);
    out.minus.resize(m);
    out.coef.resize(n_coef);
    Engine engine = make_engine(rng);
    std::normal_distribution<double> normal;
    std::vector<double> beta(grid.nodes() * d);
    Eigen::VectorXd centred(m);
    for (std::size_t s = 0; s < count; ++s) {
      fill_bridge(grid, d, engine, normal, beta);
      for (std::size_t j = 0; j < m; ++j) {
        const double a = a_list[j];
        const double gp = std::pow(v_integral(grid, d, beta, x, xi, params.gamma, a), -half_dp);
        const double gm = std::pow(v_integral(grid, d, beta, x, xi, params.gamma, -a), -half_dp);
        // Antithetic pair: f(a) and f(-a) see the same two paths.
        out.plus[j].add(0.5 * (gp + gm));
        out.minus[j].add(0.5 * (gm + gp));
        centred(j) = 0.5 * (gp + gm) - fit.f0_exact;
      }
      const Eigen::VectorXd c = solve * centred;
      for (std::size_t k = 0; k < n_coef; ++k) out.coef[k].add(c(k));
    }
    return out;
  };
  const Acc total = run_chunked<Acc>(options.n_samples, options.rng, options.workers, chunk);

  for (std::size_t j = 0; j < m; ++j) {
    TaylorRow row;
    row.a = a_list[j];
    row.f_plus = total.plus[j].mean();
    row.f_minus = total.minus[j].mean();
    row.std_error = total.plus[j].stderr_of_mean();
    fit.evenness_residual = std::max(fit.evenness_residual, std::abs(row.f_plus - row.f_minus));
    fit.rows.push_back(row);
  }
  for (std::size_t k = 0; k < n_coef; ++k) {
    fit.even_coeffs.push_back({static_cast<int>(2 * (k + 1)), total.coef[k].mean(),
                               total.coef[k].stderr_of_mean()});
  }
  return fit;
}

}  // namespace grushin
