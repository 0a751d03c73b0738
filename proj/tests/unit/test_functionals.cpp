#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "grushin/functionals.hpp"

using namespace grushin;

namespace {

const std::vector<double> kZero{0.0}, kOne{1.0}, kTwo{2.0};

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double best = 0.0;
  while (i < a.size() && j < b.size()) {
    const double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= t) ++i;
    while (j < b.size() && b[j] <= t) ++j;
    best = std::max(best, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return best;
}

}  // namespace

TEST_CASE("parameter validation names the field") {
  CHECK_NOTHROW(GrushinParams{1, 1, 1.0}.validate());
  CHECK_THROWS_WITH_AS(GrushinParams({1, 1, 0.0}).validate(), doctest::Contains("gamma"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(GrushinParams({0, 1, 1.0}).validate(), doctest::Contains("d "),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(GrushinParams({1, 0, 1.0}).validate(), doctest::Contains("dprime"),
                       std::invalid_argument);
}

TEST_CASE("v functional on the zero path") {
  const TimeGrid g = make_uniform_grid(1.0, 256);
  const DiscretePath zero(g, 1, PathKind::cameron_martin);
  CHECK(v_functional(zero, 1.0, kZero, kZero, 1.0).value == 0.0);
  for (double T : {0.3, 1.0, 2.5}) {
    const DiscretePath z(make_uniform_grid(T, 16), 1, PathKind::cameron_martin);
    for (double gamma : {0.2, 1.0, 3.0})
      CHECK(v_functional(z, T, kOne, kOne, gamma).value == doctest::Approx(T).epsilon(1e-14));
  }
  // int t^2 = 1/3 with trapezoid error 1/(6 n^2).
  const auto v = v_functional(zero, 1.0, kZero, kOne, 1.0);
  CHECK(v.grid_n == 256);
  CHECK(v.value == doctest::Approx(1.0 / 3.0).epsilon(1e-5));
  CHECK_THROWS_AS(v_functional(zero, 1.0, kZero, kOne, 0.0), std::invalid_argument);
  const std::vector<double> two_d{0.0, 0.0};
  CHECK_THROWS_AS(v_functional(zero, 1.0, two_d, two_d, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(v_functional(zero, 2.0, kZero, kOne, 1.0), std::invalid_argument);
}

TEST_CASE("path scale and eps regularization") {
  const TimeGrid g = make_uniform_grid(1.0, 64);
  const auto b = sample_bridge(g, 2, {11, 0});
  const std::vector<double> x{0.3, -0.2}, xi{1.0, 0.5};
  const double plain = v_integral(g, 2, b.values(), x, xi, 1.0);
  CHECK(v_functional(b, 1.0, x, xi, 1.0).value == plain);
  const auto doubled = b.scaled(2.0);
  CHECK(v_integral(g, 2, b.values(), x, xi, 1.0, 2.0) ==
        doctest::Approx(v_integral(g, 2, doubled.values(), x, xi, 1.0)).epsilon(1e-14));
  CHECK(v_integral(g, 2, b.values(), x, xi, 0.4, 1.0, 1e-8) ==
        doctest::Approx(v_integral(g, 2, b.values(), x, xi, 0.4)).epsilon(1e-6));
}

TEST_CASE("running max") {
  const TimeGrid g = make_uniform_grid(1.0, 2);
  const DiscretePath zero(g, 1, PathKind::cameron_martin);
  CHECK(running_max(zero, 1.0, kZero) == 0.0);
  CHECK(running_max(zero, 1.0, kTwo) == 2.0);
  const DiscretePath tent(g, 1, {0.0, 1.0, 0.0}, PathKind::cameron_martin);
  CHECK(running_max(tent, 1.0, kZero) == 1.0);
  CHECK_THROWS_AS(running_max(zero, 1.0, std::vector<double>{0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("positivity away from the origin") {
  const TimeGrid g = make_uniform_grid(1.0, 64);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto b = sample_bridge(g, 1, {8, s});
    CHECK(v_functional(b, 1.0, kZero, kOne, 0.7).value > 0.0);
    CHECK(v_functional(b, 1.0, kZero, kZero, 0.7).value > 0.0);
  }
}

TEST_CASE("domination by the running max, and its sharpness") {
  const TimeGrid g = make_uniform_grid(1.0, 128);
  for (double gamma : {0.3, 1.0, 2.0}) {
    for (std::uint64_t s = 0; s < 200; ++s) {
      const auto b = sample_bridge(g, 2, {21, s});
      const std::vector<double> z2{0.0, 0.0};
      const double v = v_functional(b, 1.0, z2, z2, gamma).value;
      CHECK(v <= std::pow(running_max(b, 1.0, z2), 2.0 * gamma) * (1.0 + 1e-12));
    }
  }
  // Staircase witness: ramp to 1 over one cell, hold, ramp back.
  for (std::int64_t n : {10, 100}) {
    const TimeGrid gn = make_uniform_grid(1.0, n);
    std::vector<double> v(gn.nodes(), 1.0);
    v.front() = v.back() = 0.0;
    const DiscretePath w(gn, 1, v, PathKind::cameron_martin);
    for (double gamma : {0.5, 1.0, 2.0}) {
      const double ratio = v_functional(w, 1.0, kZero, kZero, gamma).value /
                           std::pow(running_max(w, 1.0, kZero), 2.0 * gamma);
      CHECK(ratio >= 1.0 - 2.0 / double(n));
      CHECK(ratio <= 1.0);
    }
  }
}

TEST_CASE("scaling in distribution: v on [0,T] ~ T * v-hat") {
  const double T = 0.4, gamma = 1.0;
  const TimeGrid gT = make_uniform_grid(T, 64), g1 = make_uniform_grid(1.0, 64);
  const std::vector<double> x{0.5}, xi{-0.5};
  Engine e1 = make_engine({99, 0}), e2 = make_engine({99, 1});
  std::normal_distribution<double> normal;
  std::vector<double> buf(65), a, b;
  const int n = 50000;
  for (int s = 0; s < n; ++s) {
    fill_bridge(gT, 1, e1, normal, buf);
    a.push_back(v_integral(gT, 1, buf, x, xi, gamma));
    fill_bridge(g1, 1, e2, normal, buf);
    b.push_back(T * v_integral(g1, 1, buf, x, xi, gamma, std::sqrt(T)));
  }
  CHECK(ks_statistic(a, b) < 1.949 * std::sqrt(2.0 / n));
}
