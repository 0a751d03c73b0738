#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "grushin/asymptotics.hpp"
#include "grushin/density.hpp"
#include "grushin/paths.hpp"
#include "grushin/variational.hpp"

namespace py = pybind11;
using namespace grushin;

namespace {

McOptions mc(std::size_t samples, std::size_t grid, std::uint64_t seed, unsigned workers) {
  McOptions o;
  o.n_samples = samples;
  o.grid_n = grid;
  o.rng = RngStream{seed, 0};
  o.workers = workers;
  return o;
}

// (nodes, dim) array copied out of a path.
py::array_t<double> to_array(const DiscretePath& path) {
  py::array_t<double> out({path.nodes(), path.dim()});
  auto view = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < path.nodes(); ++i)
    for (std::size_t k = 0; k < path.dim(); ++k) view(i, k) = path(i, k);
  return out;
}

py::dict report_dict(const AsymptoticsReport& r) {
  py::list rows;
  for (const auto& row : r.rows) {
    rows.append(py::dict(py::arg("T") = row.horizon, py::arg("value") = row.scaled_value,
                         py::arg("stderr") = row.std_error, py::arg("flagged") = row.flagged));
  }
  return py::dict(py::arg("rows") = rows, py::arg("fitted_limit") = r.fitted_limit,
                  py::arg("fitted_limit_raw") = r.fitted_limit_raw,
                  py::arg("fit_method") = to_string(r.fit_method),
                  py::arg("theory_value") = r.theory_value,
                  py::arg("alt_theory_value") = r.alt_theory_value, py::arg("passes") = r.passes);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Grushin heat kernel Monte Carlo and rate-function solvers";

  py::class_<GrushinParams>(m, "GrushinParams")
      .def(py::init([](std::size_t d, std::size_t dprime, double gamma) {
             GrushinParams p{d, dprime, gamma};
             p.validate();
             return p;
           }),
           py::arg("d") = 1, py::arg("dprime") = 1, py::arg("gamma") = 1.0)
      .def_readwrite("d", &GrushinParams::d)
      .def_readwrite("dprime", &GrushinParams::d_prime)
      .def_readwrite("gamma", &GrushinParams::gamma)
      .def("__repr__", [](const GrushinParams& p) {
        return "GrushinParams(d=" + std::to_string(p.d) + ", dprime=" + std::to_string(p.d_prime) +
               ", gamma=" + std::to_string(p.gamma) + ")";
      });

  py::class_<DensityEstimate>(m, "DensityEstimate")
      .def_readonly("mean", &DensityEstimate::mean)
      .def_readonly("stderr", &DensityEstimate::std_error)
      .def_readonly("n_samples", &DensityEstimate::n_samples)
      .def_readonly("log_mean", &DensityEstimate::log_mean)
      .def_readonly("relative_stderr", &DensityEstimate::relative_stderr)
      .def_readonly("tail_ratio", &DensityEstimate::tail_ratio);

  m.def("sample_bridge",
        [](double horizon, std::int64_t n, std::size_t dim, std::uint64_t seed, std::uint64_t stream) {
          return to_array(sample_bridge(make_uniform_grid(horizon, n), dim, RngStream{seed, stream}));
        },
        py::arg("T"), py::arg("n"), py::arg("d") = 1, py::arg("seed") = 0, py::arg("stream") = 0,
        "Exact Brownian-bridge node values as an (n+1, d) array.");

  m.def("besov_norm_linear",
        [](std::vector<double> x, std::vector<double> xi, std::int64_t n, double p, double theta) {
          const TimeGrid grid = make_uniform_grid(1.0, n);
          return besov_norm(linear_path(1.0, x, xi, grid), p, theta);
        },
        py::arg("x"), py::arg("xi"), py::arg("n") = 512, py::arg("p") = 12.0,
        py::arg("theta") = 0.25);

  m.def("psi_minimize",
        [](double p, double q, double r, double gamma) {
          const PsiResult res = psi_minimize(p, q, r, gamma);
          return py::make_tuple(res.lambda_star, res.value);
        },
        py::arg("p"), py::arg("q"), py::arg("r"), py::arg("gamma"),
        "(lambda_star, value) minimising Psi_{p,q,r}.");

  m.def("c_gamma", &c_gamma, py::arg("gamma"), py::arg("grid_n") = 256);
  m.def("c_gamma_upper_bound", &c_gamma_upper_bound, py::arg("gamma"));
  m.def("asymptotic_rate_constant", &asymptotic_rate_constant, py::arg("gamma"),
        py::arg("c_gamma_value"));

  m.def("minimize_phi",
        [](std::vector<double> x, std::vector<double> xi, double a, double gamma, std::size_t grid_n) {
          const RateResult r = minimize_phi({std::move(x), std::move(xi), a, gamma, grid_n});
          return py::dict(py::arg("m") = r.m, py::arg("minimizer") = to_array(r.minimizer),
                          py::arg("iterations") = r.iterations, py::arg("grad_norm") = r.grad_norm,
                          py::arg("converged") = r.converged);
        },
        py::arg("x"), py::arg("xi"), py::arg("a"), py::arg("gamma") = 1.0, py::arg("grid_n") = 128);

  m.def("estimate_density",
        [](const GrushinParams& params, double horizon, std::vector<double> x, std::vector<double> y,
           std::vector<double> xi, std::vector<double> eta, std::size_t samples, std::size_t grid,
           std::uint64_t seed, unsigned workers, bool unit_horizon) {
          py::gil_scoped_release release;
          return estimate_density(params, horizon, {std::move(x), std::move(y)},
                                  {std::move(xi), std::move(eta)}, mc(samples, grid, seed, workers),
                                  unit_horizon ? DensityFormula::unit_horizon : DensityFormula::horizon_t);
        },
        py::arg("params"), py::arg("T"), py::arg("x"), py::arg("y"), py::arg("xi"), py::arg("eta"),
        py::arg("samples") = 100000, py::arg("grid") = 256, py::arg("seed") = 0,
        py::arg("workers") = 1, py::arg("unit_horizon") = false);

  m.def("conditional_density",
        [](const GrushinParams& params, double horizon, std::vector<double> x, std::vector<double> xi,
           std::vector<double> eta, std::size_t samples, std::size_t grid, std::uint64_t seed) {
          py::gil_scoped_release release;
          return conditional_density(params, horizon, x, xi, eta, mc(samples, grid, seed, 1));
        },
        py::arg("params"), py::arg("T"), py::arg("x"), py::arg("xi"), py::arg("eta"),
        py::arg("samples") = 100000, py::arg("grid") = 256, py::arg("seed") = 0);

  m.def("on_diagonal_experiment",
        [](const GrushinParams& params, std::vector<double> x, std::vector<double> t_list,
           std::size_t samples, std::size_t grid, std::uint64_t seed) {
          AsymptoticsReport r;
          {
            py::gil_scoped_release release;
            r = on_diagonal_experiment(params, x, t_list, mc(samples, grid, seed, 1));
          }
          return report_dict(r);
        },
        py::arg("params"), py::arg("x"), py::arg("T_list"), py::arg("samples") = 100000,
        py::arg("grid") = 256, py::arg("seed") = 0);

  m.def("degenerate_bounds",
        [](const GrushinParams& params, double gap, double delta0) {
          const DegenerateBounds b = degenerate_bounds(params, gap, delta0);
          return py::dict(py::arg("lower_const") = b.lower_const, py::arg("upper_const") = b.upper_const,
                          py::arg("lower_bound") = b.lower_bound, py::arg("upper_bound") = b.upper_bound,
                          py::arg("eps_delta0") = b.eps_delta0);
        },
        py::arg("params"), py::arg("eta_minus_y"), py::arg("delta0"));

  m.def("bridge_max_tail", &bridge_max_tail, py::arg("a"));
}
