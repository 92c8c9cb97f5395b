#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>
#include <pybind11/pybind11.h>

#include "necklace/errors.hpp"
#include "necklace/io.hpp"
#include "necklace/spectrum.hpp"
#include "necklace/timesim.hpp"

namespace py = pybind11;
using namespace necklace;

namespace {

// JSON values cross the boundary as Python objects via the json module
py::object to_python(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

py::dict diagnostics_dict(const Diagnostics& d) { return to_python(to_json(d)); }

}  // namespace

PYBIND11_MODULE(_necklace, m) {
  m.doc() = "Spectra, gap certificates and breathers on the necklace graph";
  m.attr("__version__") = NECKLACE_VERSION;

  // derived types are registered after their bases so their translators are tried first
  const auto error = py::register_exception<Error>(m, "NecklaceError");
  py::register_exception<DomainError>(m, "DomainError", error.ptr());
  py::register_exception<BracketFailure>(m, "BracketFailure", error.ptr());
  const auto cert = py::register_exception<CertificationFailure>(m, "CertificationFailure", error.ptr());
  py::register_exception<DiscreteResonance>(m, "DiscreteResonance", cert.ptr());
  py::register_exception<ConvergenceFailure>(m, "ConvergenceFailure", error.ptr());
  py::register_exception<SchemaError>(m, "SchemaError", error.ptr());
  py::register_exception<GridMismatch>(m, "GridMismatch", error.ptr());

  // spectrum
  m.def("a_of_l", &a_of_l, py::arg("l"));
  m.def("hill_discriminant", &hill_discriminant, py::arg("lam"));
  m.def("monodromy_matrix", &monodromy_matrix, py::arg("lam"));
  m.def("band", [](int mm, double l) { return band_closed_form(mm, l).lambda; }, py::arg("m"), py::arg("l"),
        "lambda_m(l) = (m + a(l))^2");
  m.def("band_from_monodromy", [](int mm, double l) { return band_from_monodromy(mm, l).lambda; }, py::arg("m"),
        py::arg("l"));

  // gap certificate
  py::class_<FrequencyConfig>(m, "FrequencyConfig")
      .def(py::init([](int k0, int kappa, double alpha, double A, double p, int harmonics) {
             return FrequencyConfig::with_harmonics(k0, kappa, alpha, A < 0 ? alpha : A, p, harmonics);
           }),
           py::arg("k0") = 1, py::arg("kappa") = 5, py::arg("alpha") = 0.0, py::arg("A") = -1.0, py::arg("p") = 3.0,
           py::arg("harmonics") = 1)
      .def_readonly("k0", &FrequencyConfig::k0)
      .def_readonly("kappa", &FrequencyConfig::kappa)
      .def_readonly("alpha", &FrequencyConfig::alpha)
      .def_readonly("A", &FrequencyConfig::A)
      .def_readonly("p", &FrequencyConfig::p)
      .def_readonly("K", &FrequencyConfig::K)
      .def_property_readonly("omega", &FrequencyConfig::omega)
      .def_property_readonly("harmonic_count", &FrequencyConfig::harmonic_count);
  m.def("minimal_kappa", &minimal_kappa, py::arg("k0"), py::arg("A"), py::arg("alpha"));
  m.def(
      "gap_certificate",
      [](int k0, double alpha, double A, int kappa) {
        if (A < 0) A = alpha;
        const int kmin = minimal_kappa(k0, A, alpha);
        if (kappa <= 0) kappa = kmin;
        const FrequencyConfig c{k0, kappa, alpha, A, 3.0, kappa};
        c.validate();
        return to_python(to_json(delta_star(c), kmin));
      },
      py::arg("k0") = 1, py::arg("alpha") = 0.0, py::arg("A") = -1.0, py::arg("kappa") = 0,
      "gap report as written by `necklace gap`");

  // grids
  py::class_<NecklaceGrid>(m, "NecklaceGrid")
      .def(py::init([](int cells, int points, const std::string& boundary) {
             return NecklaceGrid(cells, points, boundary_from_string(boundary));
           }),
           py::arg("cells"), py::arg("points"), py::arg("boundary") = "periodic_cells")
      .def_property_readonly("cells", &NecklaceGrid::half_width)
      .def_property_readonly("points", &NecklaceGrid::points_per_edge)
      .def_property_readonly("step", &NecklaceGrid::step)
      .def_property_readonly("boundary", [](const NecklaceGrid& g) { return to_string(g.boundary()); })
      .def_property_readonly("dofs", [](const NecklaceGrid& g) { return g.dof_count(true); });

  // breathers
  py::class_<SolverOptions>(m, "SolverOptions")
      .def(py::init<>())
      .def_readwrite("time_samples", &SolverOptions::time_samples)
      .def_readwrite("pivot_tol", &SolverOptions::pivot_tol)
      .def_readwrite("inner_tol", &SolverOptions::inner_tol)
      .def_readwrite("inner_max_iter", &SolverOptions::inner_max_iter)
      .def_readwrite("outer_tol", &SolverOptions::outer_tol)
      .def_readwrite("outer_max_iter", &SolverOptions::outer_max_iter)
      .def_readwrite("newton_tol", &SolverOptions::newton_tol)
      .def_readwrite("newton_max_iter", &SolverOptions::newton_max_iter)
      .def_readwrite("newton_continuation", &SolverOptions::newton_continuation)
      .def_readwrite("newton_nehari_start", &SolverOptions::newton_nehari_start)
      .def_readwrite("seed_amplitude", &SolverOptions::seed_amplitude)
      .def_readwrite("seed_width_cells", &SolverOptions::seed_width_cells)
      .def_readwrite("seed_center", &SolverOptions::seed_center);

  py::class_<TimeFourierField>(m, "TimeFourierField")
      .def_readwrite("coefficients", &TimeFourierField::coefficients, "column j - 1 holds a_j")
      .def_readonly("config", &TimeFourierField::config)
      .def_readonly("grid", &TimeFourierField::grid)
      .def_property_readonly("period", &TimeFourierField::period)
      .def("evaluate", &TimeFourierField::evaluate, py::arg("t"));

  py::class_<BreatherState>(m, "BreatherState")
      .def_readonly("field", &BreatherState::field)
      .def_readonly("converged", &BreatherState::converged)
      .def_readonly("iterations", &BreatherState::iterations)
      .def_readonly("message", &BreatherState::message)
      .def_property_readonly("method", [](const BreatherState& s) { return to_string(s.method); })
      .def_property_readonly("diagnostics", [](const BreatherState& s) { return diagnostics_dict(s.diagnostics); });

  py::class_<BreatherProblem>(m, "BreatherProblem")
      .def(py::init([](const FrequencyConfig& c, const NecklaceGrid& g, const std::string& sign, SolverOptions o) {
             return std::make_unique<BreatherProblem>(c, g, nonlinearity_from_string(sign), o);
           }),
           py::arg("config"), py::arg("grid"), py::arg("sign") = "focusing", py::arg("options") = SolverOptions{})
      .def_property_readonly("harmonic_count", &BreatherProblem::harmonic_count)
      .def_property_readonly("min_abs_eigenvalue", &BreatherProblem::min_abs_eigenvalue)
      .def("seed", &BreatherProblem::seed)
      .def("evaluate_J", &BreatherProblem::evaluate_J, py::arg("u"))
      .def("nehari_minimize", &BreatherProblem::nehari_minimize, py::arg("start"),
           py::call_guard<py::gil_scoped_release>())
      .def("newton_solve", &BreatherProblem::newton_solve, py::arg("start"), py::call_guard<py::gil_scoped_release>())
      .def("diagnose", [](const BreatherProblem& P, const TimeFourierField& u) { return diagnostics_dict(P.diagnose(u)); },
           py::arg("u"));

  m.def(
      "return_error",
      [](const BreatherState& b, double dt, int periods) {
        const FrequencyConfig& c = b.field.config;
        const WaveIntegrator W(b.field.grid, c.alpha, c.p, b.sign);
        ReturnReport r;
        {
          py::gil_scoped_release release;
          r = simulate(b, dt, periods, W);
        }
        py::dict d;
        d["dt"] = r.dt;
        d["steps"] = r.steps;
        d["period"] = r.period;
        d["return_error"] = r.return_error;
        d["antiperiod_error"] = r.antiperiod_error;
        d["energy_drift"] = r.energy_drift;
        d["tail_growth"] = r.tail_growth;
        return d;
      },
      py::arg("breather"), py::arg("dt"), py::arg("periods") = 1);

  m.def("write_breather",
        [](const std::filesystem::path& p, const BreatherState& s, const SolverOptions& o) { write_breather(p, s, o); },
        py::arg("path"), py::arg("state"), py::arg("options") = SolverOptions{});
  m.def("read_breather", [](const std::filesystem::path& p) { return read_breather(p).state; }, py::arg("path"));
}
