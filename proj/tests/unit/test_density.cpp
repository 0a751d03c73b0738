#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "grushin/density.hpp"

using namespace grushin;

namespace {

McOptions mc(std::size_t n, std::uint64_t seed, std::size_t grid = 128, unsigned workers = 1) {
  McOptions o;
  o.n_samples = n;
  o.grid_n = grid;
  o.rng = {seed, 0};
  o.workers = workers;
  return o;
}

double combined(const DensityEstimate& a, const DensityEstimate& b) {
  return std::hypot(a.std_error, b.std_error);
}

const GrushinParams kUnit{1, 1, 1.0};

}  // namespace

TEST_CASE("basic contract") {
  const auto e = estimate_density(kUnit, 0.5, {{1.0}, {0.0}}, {{1.0}, {0.2}}, mc(5000, 1));
  CHECK(e.mean > 0.0);
  CHECK(e.std_error > 0.0);
  CHECK(e.n_samples == 5000);
  CHECK(e.log_mean == doctest::Approx(std::log(e.mean)));
  CHECK(e.relative_stderr == doctest::Approx(e.std_error / e.mean));
  CHECK(e.tail_ratio >= 1.0);
  CHECK_FALSE(e.underflow);
  CHECK_THROWS_AS(estimate_density(kUnit, 0.0, {{1.0}, {0.0}}, {{1.0}, {0.0}}, mc(10, 1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(estimate_density(kUnit, 1.0, {{1.0, 0.0}, {0.0}}, {{1.0}, {0.0}}, mc(10, 1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(estimate_density({1, 1, -1.0}, 1.0, {{1.0}, {0.0}}, {{1.0}, {0.0}}, mc(10, 1)),
                  std::invalid_argument);
}

TEST_CASE("horizon-T and unit-horizon formulas agree") {
  struct Point {
    GrushinParams params;
    double T;
    EndPoint from, to;
  };
  const std::vector<Point> points{
      {{1, 1, 1.0}, 0.5, {{1.0}, {0.0}}, {{1.0}, {0.2}}},
      {{2, 1, 0.5}, 0.3, {{0.5, -0.5}, {0.0}}, {{0.2, 0.1}, {0.4}}},
      {{1, 2, 2.0}, 1.0, {{0.0}, {0.0, 0.0}}, {{1.0}, {0.3, -0.3}}},
  };
  for (const auto& p : points) {
    const auto a = estimate_density(p.params, p.T, p.from, p.to, mc(100000, 3));
    const auto b = estimate_density(p.params, p.T, p.from, p.to, mc(100000, 4), DensityFormula::unit_horizon);
    CHECK(std::abs(a.mean - b.mean) <= 3.0 * combined(a, b));
  }
}

TEST_CASE("degenerate on-diagonal law is exactly T-independent") {
  const EndPoint o{{0.0}, {0.0}};
  const auto a = estimate_density(kUnit, 0.5, o, o, mc(100000, 5));
  const auto b = estimate_density(kUnit, 1.0, o, o, mc(100000, 6));
  const double sa = std::pow(0.5, 1.5), sb = 1.0;
  CHECK(std::abs(sa * a.mean - sb * b.mean) <= 3.0 * std::hypot(sa * a.std_error, sb * b.std_error));

  const auto c = on_diagonal_constant(kUnit, mc(100000, 6));
  CHECK(c.mean > 0.0);
  CHECK(std::abs(c.mean - b.mean) <= 3.0 * combined(b, c));
  const auto c2 = on_diagonal_constant(kUnit, mc(200000, 6));
  CHECK(std::abs(c2.mean / c.mean - 1.0) < 0.02);
}

TEST_CASE("conditional density is a centred symmetric density") {
  const std::vector<double> one{1.0};
  const auto opts = mc(50000, 7);
  const double sigma = std::sqrt(functional_moments(kUnit, 1.0, one, one, opts).mean());
  std::vector<std::vector<double>> etas;
  const int n = 401;
  const double lo = -6.0 * sigma, h = 12.0 * sigma / (n - 1);
  for (int i = 0; i < n; ++i) etas.push_back({lo + i * h});
  const auto q = conditional_density_curve(kUnit, 1.0, one, one, etas, opts);
  double integral = 0.0;
  for (int i = 0; i < n; ++i) integral += (i == 0 || i == n - 1 ? 0.5 : 1.0) * q[i].mean * h;
  CHECK(integral == doctest::Approx(1.0).epsilon(0.02));

  const auto qp = conditional_density(kUnit, 1.0, one, one, {1.0}, mc(50000, 8));
  const auto qm = conditional_density(kUnit, 1.0, one, one, {-1.0}, mc(50000, 9));
  CHECK(std::abs(qp.mean - qm.mean) <= 3.0 * combined(qp, qm));
  const auto q0 = conditional_density(kUnit, 1.0, one, one, {0.0}, mc(50000, 8));
  CHECK(q0.mean >= qp.mean);
}

TEST_CASE("Cameron-Martin shift keeps the estimator unbiased") {
  const double T = 0.5;
  const EndPoint from{{0.0}, {0.0}}, to{{1.0}, {0.5}};
  const std::size_t grid = 128;
  const TimeGrid g1 = make_uniform_grid(1.0, grid);
  std::vector<double> v(g1.nodes());
  for (std::size_t i = 1; i + 1 < g1.nodes(); ++i) v[i] = 0.4 * std::sin(std::numbers::pi * g1.times[i]);
  const DiscretePath h(g1, 1, v, PathKind::cameron_martin);
  const auto plain = estimate_density(kUnit, T, from, to, mc(100000, 10, grid));
  for (auto formula : {DensityFormula::horizon_t, DensityFormula::unit_horizon}) {
    const DiscretePath s = importance_shift(h, T, formula, grid);
    const auto shifted = estimate_density(kUnit, T, from, to, mc(100000, 11, grid), formula, &s);
    CHECK(std::abs(plain.mean - shifted.mean) <= 3.0 * combined(plain, shifted));
  }
  const DiscretePath wrong(make_uniform_grid(1.0, 64), 1, PathKind::cameron_martin);
  CHECK_THROWS_AS(estimate_density(kUnit, T, from, to, mc(10, 1, grid), DensityFormula::unit_horizon, &wrong),
                  std::invalid_argument);
}

TEST_CASE("results do not depend on the worker count") {
  const EndPoint from{{0.3}, {0.0}}, to{{0.9}, {0.4}};
  const auto a = estimate_density(kUnit, 0.4, from, to, mc(20000, 12, 64, 1));
  const auto b = estimate_density(kUnit, 0.4, from, to, mc(20000, 12, 64, 4));
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
  CHECK(a.tail_ratio == b.tail_ratio);
}

TEST_CASE("continuity in the endpoints") {
  const auto a = estimate_density(kUnit, 0.5, {{1.0}, {0.0}}, {{1.0}, {0.2}}, mc(50000, 13));
  const auto b = estimate_density(kUnit, 0.5, {{1.0}, {0.0}}, {{1.01}, {0.21}}, mc(50000, 13));
  CHECK(std::abs(a.mean - b.mean) <= 0.05 * a.mean + 3.0 * combined(a, b));
}

TEST_CASE("agrees with a direct simulation of the diffusion") {
  // X = x + b, Y = y + int |X|^gamma db-hat by Euler steps, density by box counting.
  const double T = 0.5, gamma = 1.0, x0 = 0.5, xi = 0.5, eta = 0.0, half = 0.1;
  const int steps = 128, n = 200000;
  std::mt19937_64 engine(2024);
  std::normal_distribution<double> normal;
  const double dt = T / steps, sq = std::sqrt(dt);
  int hits = 0;
  for (int s = 0; s < n; ++s) {
    double x = x0, y = 0.0;
    for (int k = 0; k < steps; ++k) {
      y += std::pow(std::abs(x), gamma) * sq * normal(engine);
      x += sq * normal(engine);
    }
    if (std::abs(x - xi) < half && std::abs(y - eta) < half) ++hits;
  }
  const double box = 4.0 * half * half;
  const double p = hits / (n * box);
  const double se = std::sqrt(hits) / (n * box);
  const auto e = estimate_density({1, 1, gamma}, T, {{x0}, {0.0}}, {{xi}, {eta}}, mc(100000, 14));
  CHECK(std::abs(p - e.mean) <= 4.0 * std::hypot(se, e.std_error) + 0.03 * e.mean);
}
