// Acceptance checks 1-13. Prints one PASS/FAIL line per criterion.
//
//   acceptance          run every criterion
//   acceptance N [M..]  run only the listed criteria
//
// Exit status is 0 when every selected criterion passes, 1 otherwise.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "grushin/asymptotics.hpp"
#include "grushin/cli/config.hpp"
#include "grushin/cli/run.hpp"
#include "grushin/density.hpp"
#include "grushin/functionals.hpp"
#include "grushin/paths.hpp"
#include "grushin/variational.hpp"

using namespace grushin;

namespace {

constexpr double kPi = std::numbers::pi;

McOptions mc(std::size_t n, std::uint64_t seed, std::size_t grid = 256) {
  McOptions o;
  o.n_samples = n;
  o.grid_n = grid;
  o.rng = {seed, 0};
  return o;
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------
// Variational
// ---------------------------------------------------------------------------

Verdict psi_closed_form() {
  std::mt19937_64 engine(1);
  std::uniform_real_distribution<double> pq(0.05, 20.0), g(0.05, 4.0);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double p = pq(engine), q = pq(engine), gamma = g(engine);
    const auto r = psi_minimize(p, q, 0.0, gamma);
    const double ev = std::abs(r.value / psi_closed_form_value(p, q, gamma) - 1.0);
    const double el = std::abs(r.lambda_star / psi_closed_form_lambda(p, q, gamma) - 1.0);
    worst = std::max({worst, ev, el});
  }
  return {worst <= 1e-8, fmt("worst relative error %.3g over 20 triples (tol 1e-8)", worst)};
}

Verdict sharp_constant() {
  const double c = c_gamma(1.0, 256), bound = c_gamma_upper_bound(1.0);
  const double err = std::abs(c - 1.0 / kPi);
  return {err <= 1e-3 && c <= bound,
          fmt("c_1 = %.8f, |c_1 - 1/pi| = %.2g (tol 1e-3), bound B(2,2)^(1/2) = %.5f", c, err, bound)};
}

Verdict rate_function() {
  const std::vector<double> zero{0.0};
  const auto r1 = minimize_phi({zero, zero, 1.0, 1.0, 256});
  RateOptions direct;
  direct.rescale = false;
  const auto r4 = minimize_phi({zero, zero, 4.0, 1.0, 256}, direct);
  const double e1 = std::abs(r1.m / (2.0 * kPi) - 1.0);
  const double e4 = std::abs(r4.m / (4.0 * r1.m) - 1.0);
  return {r1.converged && e1 <= 0.01 && e4 <= 0.02,
          fmt("m(0,0,1) = %.6f (rel err %.2g, tol 1e-2); direct m(0,0,4) = %.5f vs 4 m(0,0,1) "
              "(rel err %.2g, tol 2e-2)",
              r1.m, e1, r4.m, e4)};
}

Verdict gradient_check() {
  std::mt19937_64 engine(4);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (double gamma : {0.7, 1.0, 2.0}) {
    for (std::uint64_t k = 0; k < 10; ++k) {
      const std::vector<double> x{normal(engine)}, xi{normal(engine)};
      const PhiProblem prob{x, xi, 1.0 + 0.2 * double(k), gamma, 64};
      const double eps = gamma < 0.5 ? 1e-2 : 0.0;
      DiscretePath h = sample_bridge(make_uniform_grid(1.0, 64), 1, {400 + k, 0}).scaled(0.5);
      const auto g = phi_gradient(prob, h, eps);
      double num = 0.0, den = 0.0;
      for (std::size_t j = 1; j + 1 < g.size(); ++j) {
        const double step = 1e-6, keep = h.values()[j];
        h.values()[j] = keep + step;
        const double fp = phi_value(prob, h, eps);
        h.values()[j] = keep - step;
        const double fm = phi_value(prob, h, eps);
        h.values()[j] = keep;
        const double fd = (fp - fm) / (2.0 * step);
        num += (fd - g[j]) * (fd - g[j]);
        den += g[j] * g[j];
      }
      worst = std::max(worst, std::sqrt(num / den));
    }
  }
  return {worst <= 1e-5, fmt("worst relative gradient error %.3g over 30 paths (tol 1e-5)", worst)};
}

// ---------------------------------------------------------------------------
// Density
// ---------------------------------------------------------------------------

DensityEstimate on_diagonal_row() {
  static const DensityEstimate e = estimate_density({1, 1, 1.0}, 0.02, {{1.0}, {0.0}}, {{1.0}, {0.0}},
                                                    mc(1000000, 5));
  return e;
}

Verdict on_diagonal_literal() {
  const auto e = on_diagonal_row();
  const double scaled = 0.02 * e.mean, se = 0.02 * e.std_error;
  const double target = 1.0 / std::sqrt(2.0 * kPi);
  const bool pass = std::abs(scaled - target) <= 3.0 * se + 0.05 * target;
  return {pass, fmt("T p_T((1,0),(1,0)) at T=0.02 = %.5f +- %.5f vs 1/sqrt(2 pi) = %.5f", scaled, se, target)};
}

Verdict on_diagonal_corrected() {
  const auto e = on_diagonal_row();
  const double scaled = 0.02 * e.mean, se = 0.02 * e.std_error;
  const double target = 1.0 / (2.0 * kPi);
  const bool pass = std::abs(scaled - target) <= 3.0 * se + 0.05 * target;
  return {pass, fmt("same row vs (2 pi)^{-(d+d')/2} |x|^{-g d'} = 1/(2 pi) = %.5f (rel diff %.2g)", target,
                    scaled / target - 1.0)};
}

Verdict degenerate_t_independence() {
  const EndPoint o{{0.0}, {0.0}};
  const GrushinParams p{1, 1, 1.0};
  const auto a = estimate_density(p, 0.5, o, o, mc(200000, 6));
  const auto b = estimate_density(p, 1.0, o, o, mc(200000, 7));
  const double s = std::pow(0.5, 1.5);
  const double diff = std::abs(s * a.mean - b.mean);
  const double tol = 3.0 * std::hypot(s * a.std_error, b.std_error);
  return {diff <= tol, fmt("scaled T=0.5: %.5f, T=1: %.5f, |diff| = %.2g (tol %.2g)", s * a.mean, b.mean, diff, tol)};
}

Verdict two_formula() {
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
  bool pass = true;
  std::string detail;
  std::uint64_t seed = 70;
  for (const auto& pt : points) {
    const auto a = estimate_density(pt.params, pt.T, pt.from, pt.to, mc(100000, seed++));
    const auto b = estimate_density(pt.params, pt.T, pt.from, pt.to, mc(100000, seed++),
                                    DensityFormula::unit_horizon);
    const double z = std::abs(a.mean - b.mean) / std::hypot(a.std_error, b.std_error);
    pass = pass && z <= 3.0;
    detail += fmt("%s%.4g/%.4g (z=%.2f)", detail.empty() ? "" : ", ", a.mean, b.mean, z);
  }
  return {pass, "horizon-T/unit-horizon " + detail};
}

Verdict off_diagonal() {
  const GrushinParams p{1, 1, 1.0};
  const std::vector<double> horizons{0.2, 0.1, 0.05};
  OffDiagonalOptions plain;
  plain.shift = ShiftPolicy::off;
  plain.relative_tolerance = 0.10;
  const auto r0 = off_diagonal_experiment(p, {{0.0}, {0.0}}, {{1.0}, {0.0}}, horizons, mc(200000, 8), plain);
  OffDiagonalOptions is;
  is.shift = ShiftPolicy::on;
  is.relative_tolerance = 0.15;
  const auto r1 = off_diagonal_experiment(p, {{0.0}, {0.0}}, {{1.0}, {1.0}}, horizons, mc(200000, 9), is);
  return {r0.passes && r1.passes,
          fmt("eta=y: fit %.4f vs %.4f (tol 10%%); |eta-y|=1 with shift: fit %.4f vs %.4f (tol 15%%)",
              r0.fitted_limit, r0.theory_value, r1.fitted_limit, r1.theory_value)};
}

// ---------------------------------------------------------------------------
// Paths and bounds
// ---------------------------------------------------------------------------

Verdict bridge_max() {
  bool pass = true;
  std::string detail;
  for (std::size_t d : {1, 2}) {
    const auto r = max_prob_check(d, 1.0, std::vector<double>(d, 0.0), {0.75, 1.0, 1.5}, mc(1000000, 10 + d, 128));
    pass = pass && r.passes;
    for (const auto& row : r.rows) {
      const bool exact_ok = d != 1 || (row.ge_lo <= row.exact_ge && row.exact_ge <= row.ge_hi);
      pass = pass && exact_ok;
      detail += fmt("%sd=%zu a=%.2f P(M>=a)=%.5f [%.5f,%.5f]", detail.empty() ? "" : "; ", d, row.a, row.p_ge,
                    row.ge_lo, row.ge_hi);
      if (d == 1) detail += fmt(" exact %.5f", row.exact_ge);
    }
  }
  return {pass, detail};
}

Verdict garsia() {
  const TimeGrid g = make_uniform_grid(1.0, 64);
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto b = sample_bridge(g, 1, {12, s});
    const double bound = 96.0 * besov_norm(b, 12.0, 0.25);
    for (std::size_t i = 0; i < g.nodes(); ++i)
      for (std::size_t j = i + 1; j < g.nodes(); ++j) {
        const double lhs = std::abs(b(j, 0) - b(i, 0));
        worst = std::max(worst, lhs / (bound * std::pow(g.times[j] - g.times[i], 1.0 / 6.0)));
      }
  }
  return {worst <= 1.0, fmt("largest |b(t)-b(s)| / (96 B |t-s|^(1/6)) = %.4f over 1000 bridges", worst)};
}

Verdict besov_closed_form() {
  const double exact = std::pow(2.0 / (9.0 * 10.0), 1.0 / 12.0);
  const std::vector<double> zero{0.0}, one{1.0};
  std::string detail = fmt("exact %.6f;", exact);
  double err = 0.0;
  for (std::int64_t n : {64, 128, 256, 512}) {
    const TimeGrid g = make_uniform_grid(1.0, n);
    err = std::abs(besov_norm(linear_path(1.0, zero, one, g)) - exact);
    detail += fmt(" n=%lld err %.2g", static_cast<long long>(n), err);
  }
  return {err <= 1e-3, detail};
}

Verdict taylor() {
  const GrushinParams p{1, 2, 2.0};
  const std::vector<double> one{1.0};
  const std::vector<double> a_list{0.01, 0.1, 0.2, 0.3, 0.4};
  const auto f1 = taylor_experiment(p, one, one, a_list, 2, mc(100000, 13));
  const auto f2 = taylor_experiment(p, one, one, a_list, 2, mc(100000, 14));
  const double c1 = f1.even_coeffs.at(0).coefficient, c2 = f2.even_coeffs.at(0).coefficient;
  const auto& r0 = f1.rows.front();
  const bool continuity = std::abs(r0.f_plus - f1.f0_exact) <= 3.0 * r0.std_error + 1e-3;
  const bool stable = std::abs(c1 / c2 - 1.0) <= 0.2;
  const bool even = f1.evenness_residual == 0.0 && f2.evenness_residual == 0.0;
  return {continuity && stable && even,
          fmt("gamma=2 d'=2: evenness residual %.1g/%.1g, f(0.01) = %.6f vs f0 = %.1f, a^2 coefficient %.4f "
              "and %.4f (ratio %.3f)",
              f1.evenness_residual, f2.evenness_residual, r0.f_plus, f1.f0_exact, c1, c2, c1 / c2)};
}

Verdict reproducibility() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "grushin-acceptance";
  fs::remove_all(dir);
  bool pass = true;
  std::string detail;
  const std::vector<std::vector<std::string>> commands{
      {"density", "--x", "1", "--xi", "0.5", "--eta", "0.3", "--T", "0.5", "--samples", "50000"},
      {"on-diag", "--x", "0", "--samples", "20000", "--grid", "128"},
      {"off-diag", "--xi", "1", "--eta", "1", "--T-list", "0.2,0.05", "--samples", "20000", "--grid", "128"},
  };
  for (const auto& base : commands) {
    std::vector<std::string> digests;
    for (const char* workers : {"1", "4", "1"}) {
      auto args = base;
      args.insert(args.end(), {"--workers", workers, "--out-dir", dir.string()});
      digests.push_back(cli::run(cli::parse_args(args)).output_digest);
    }
    const bool same = digests[0] == digests[1] && digests[0] == digests[2];
    pass = pass && same;
    detail += fmt("%s%s %s", detail.empty() ? "" : ", ", base[0].c_str(), same ? "identical" : "DIFFER");
  }
  fs::remove_all(dir);
  return {pass, "digests at workers 1/4/1: " + detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<std::string, std::pair<std::string, std::function<Verdict()>>> criteria{
      {"1", {"psi closed form", psi_closed_form}},
      {"2", {"sharp constant c_1", sharp_constant}},
      {"3", {"rate function m(0,0,a)", rate_function}},
      {"4", {"gradient check", gradient_check}},
      {"5", {"on-diagonal limit, literal target", on_diagonal_literal}},
      {"5b", {"on-diagonal limit, corrected constant (informational)", on_diagonal_corrected}},
      {"6", {"degenerate on-diagonal T-independence", degenerate_t_independence}},
      {"7", {"two-formula oracle", two_formula}},
      {"8", {"off-diagonal LDP limit", off_diagonal}},
      {"9", {"bridge-max bounds", bridge_max}},
      {"10", {"Garsia inequality", garsia}},
      {"11", {"Besov closed form", besov_closed_form}},
      {"12", {"Taylor expansion", taylor}},
      {"13", {"reproducibility", reproducibility}},
  };
  const std::vector<std::string> order{"1", "2", "3", "4", "5", "5b", "6", "7", "8", "9", "10", "11", "12", "13"};
  std::vector<std::string> selected;
  for (int i = 1; i < argc; ++i) selected.emplace_back(argv[i]);
  if (selected.empty()) selected = order;

  bool all = true;
  for (const auto& id : selected) {
    const auto it = criteria.find(id);
    if (it == criteria.end()) {
      std::fprintf(stderr, "unknown criterion %s\n", id.c_str());
      return 2;
    }
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = it->second.second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %s (%s): %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", id.c_str(),
                it->second.first.c_str(), v.detail.c_str(), secs);
    std::fflush(stdout);
    all = all && v.pass;
  }
  return all ? 0 : 1;
}
