#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "besovreg/analysis.hpp"
#include "besovreg/cli/commands.hpp"
#include "besovreg/error.hpp"
#include "besovreg/oracles.hpp"
#include "besovreg/shrinkage.hpp"

namespace py = pybind11;
using namespace besovreg;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

EstimatorConfig make_config(int d, double s, double p, double q, double sigma, std::optional<int> r,
                            std::optional<double> beta, double kappa, double norm_scale) {
  EstimatorConfig c;
  c.d = d;
  c.s = s;
  c.p = p;
  c.q = q;
  c.sigma = sigma;
  c.r = r;
  c.beta = beta;
  c.kappa = kappa;
  c.norm_scale = norm_scale;
  return c;
}

ObservationSet observations(const Array& values, int n, int d, double sigma) {
  if (values.ndim() != 1) throw PreconditionError("values must be one-dimensional");
  SampleGrid grid = build_grid(n, d);
  if (static_cast<std::size_t>(values.size()) != grid.size()) {
    throw PreconditionError("values must hold 2^(n d) entries in grid order");
  }
  std::vector<double> v(values.data(), values.data() + values.size());
  return observations_from_values(std::move(grid), std::move(v), sigma);
}

Array evaluate_points(const PiecewisePoly& s, const Array& points) {
  if (points.ndim() != 2 || points.shape(1) != s.d) throw PreconditionError("points must have shape (k, d)");
  Array out(points.shape(0));
  auto o = out.mutable_unchecked<1>();
  for (py::ssize_t i = 0; i < points.shape(0); ++i) {
    o(i) = eval_pwp(s, std::span<const double>(points.data(i, 0), static_cast<std::size_t>(s.d)));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Noise-level-aware piecewise-polynomial regression on dyadic grids";

  // translators run newest first, so the base class goes in first
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<BudgetError>(m, "BudgetError", PyExc_RuntimeError);

  py::class_<PiecewisePoly>(m, "PiecewisePoly")
      .def_readonly("level", &PiecewisePoly::level)
      .def_readonly("d", &PiecewisePoly::d)
      .def_readonly("r", &PiecewisePoly::r)
      .def_property_readonly("rho", &PiecewisePoly::rho)
      .def_property_readonly("coeffs", [](const PiecewisePoly& s) { return s.coeffs; })
      .def("__call__", &evaluate_points, py::arg("points"), "Evaluate at an array of shape (k, d).");

  py::class_<EstimateResult>(m, "EstimateResult")
      .def_readonly("estimate", &EstimateResult::estimate)
      .def_readonly("step0_zero", &EstimateResult::step0_zero)
      .def_readonly("zeroed_fraction", &EstimateResult::zeroed_fraction)
      .def_readonly("warnings", &EstimateResult::warnings)
      .def_property_readonly("epsilon", [](const EstimateResult& r) { return r.schedule.epsilon; })
      .def_property_readonly("k_star", [](const EstimateResult& r) { return r.schedule.k_star; })
      .def_property_readonly("lambdas", [](const EstimateResult& r) { return r.schedule.lambdas; });

  m.def("grid_points", [](int n, int d) {
    const SampleGrid grid = build_grid(n, d);
    Array out({static_cast<py::ssize_t>(grid.size()), static_cast<py::ssize_t>(d)});
    std::copy(grid.flat_points().begin(), grid.flat_points().end(), out.mutable_data());
    return out;
  }, py::arg("n"), py::arg("d"), "Grid G_n as an (m, d) array in lexicographic order.");

  m.def("observe", [](const std::string& target, const std::map<std::string, double>& params, int n, int d,
                      double sigma, std::uint64_t seed, const std::string& noise) {
    const ObservationSet obs = observe(make_target({target, params}, d), build_grid(n, d), sigma,
                                       parse_noise_kind(noise), seed);
    return Array(static_cast<py::ssize_t>(obs.size()), obs.values.data());
  }, py::arg("target"), py::arg("params") = std::map<std::string, double>{}, py::arg("n"), py::arg("d") = 1,
        py::arg("sigma") = 0.0, py::arg("seed") = 1, py::arg("noise") = "gaussian");

  m.def("estimate", [](const Array& values, int n, int d, double sigma, double s, double p, double q,
                       std::optional<int> r, std::optional<double> beta, double kappa, double norm_scale,
                       unsigned threads) {
    const EstimatorConfig c = make_config(d, s, p, q, sigma, r, beta, kappa, norm_scale);
    const ObservationSet obs = observations(values, n, d, sigma);
    py::gil_scoped_release release;
    return estimate_detailed(obs, c, threads);
  }, py::arg("values"), py::arg("n"), py::arg("d") = 1, py::arg("sigma") = 0.0, py::arg("s") = 1.0,
        py::arg("p") = 2.0, py::arg("q") = 2.0, py::arg("r") = py::none(), py::arg("beta") = py::none(),
        py::arg("kappa") = 1.0, py::arg("norm_scale") = 1.0, py::arg("threads") = 1);

  m.def("decompose", [](const Array& values, int n, int d, int r) {
    const MultiscaleDecomposition dec = decompose(observations(values, n, d, 0.0), r);
    std::vector<std::vector<double>> levels;
    for (const auto& nu : dec.levels) levels.push_back(nu.entries);
    return levels;
  }, py::arg("values"), py::arg("n"), py::arg("d"), py::arg("r"), "Multiscale coefficients nu_0 .. nu_{n-r}.");

  m.def("lq_error", [](const std::string& target, const std::map<std::string, double>& params,
                       const PiecewisePoly& est, double q) {
    const FunctionOracle f = make_target({target, params}, est.d);
    const int n = est.level + est.r;
    return lq_distance(f, est, q, QuadratureSpec::for_grid(n, est.r, q));
  }, py::arg("target"), py::arg("params"), py::arg("estimate"), py::arg("q") = 2.0);

  m.def("epsilon", &epsilon, py::arg("sigma"), py::arg("m"), py::arg("s"), py::arg("d"));
  m.def("k_star", &k_star, py::arg("eps"), py::arg("s"));
  m.def("hard_threshold", &hard_threshold, py::arg("x"), py::arg("lam"));
  m.def("target_names", &target_names);

  m.def("rate_fit", [](const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw PreconditionError("x and y must have equal length");
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t i = 0; i < x.size(); ++i) pairs.emplace_back(x[i], y[i]);
    const RateFit fit = rate_fit(pairs);
    return py::dict(py::arg("slope") = fit.slope, py::arg("intercept") = fit.intercept,
                    py::arg("r_squared") = fit.r_squared);
  }, py::arg("x"), py::arg("y"));

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Run the command line tool in-process; returns (exit_code, stdout, stderr).");

  m.attr("__version__") = cli::kVersion;
}
