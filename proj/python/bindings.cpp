#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "expdelay/errors.hpp"
#include "expdelay/montecarlo.hpp"
#include "expdelay/oracle.hpp"
#include "expdelay/scenario.hpp"

namespace py = pybind11;
using namespace expdelay;

namespace
{
py::dict diagnostics_dict(SolutionDiagnostics const& d)
{
    py::dict out;
    out["system_residual"] = d.system_residual;
    out["orthogonality"] = d.orthogonality;
    out["support_overlaps"] = d.support_overlaps;
    out["kappa_nonzeros"] = d.kappa_nonzeros;
    out["g_nonzeros"] = d.g_nonzeros;
    out["g_spectral_bound"] = d.g_spectral_bound;
    return out;
}
}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Exponential utility maximization for Gaussian markets with delayed information";

    // The remaining error types derive from std::invalid_argument or
    // std::domain_error and arrive as ValueError.
    py::register_exception<SpectrumViolation>(m, "SpectrumViolation", PyExc_ArithmeticError);
    py::register_exception<ConditioningError>(m, "ConditioningError", PyExc_ArithmeticError);
    py::register_exception<InvalidPerturbation>(m, "InvalidPerturbation", PyExc_ValueError);

    py::class_<TimeGrid>(m, "TimeGrid")
        .def(py::init<double, int>(), py::arg("horizon"), py::arg("n_steps"))
        .def_property_readonly("horizon", &TimeGrid::horizon)
        .def_property_readonly("n_steps", &TimeGrid::n_steps)
        .def_property_readonly("step", &TimeGrid::step)
        .def("nodes", &TimeGrid::nodes);

    py::class_<DelayMap>(m, "DelayMap")
        .def_static("constant_lag", &DelayMap::constant_lag, py::arg("lag"), py::arg("horizon"))
        .def_static("piecewise_linear", &DelayMap::piecewise_linear, py::arg("breakpoints"),
                    py::arg("epsilon"), py::arg("horizon"))
        .def_static("tabulated", &DelayMap::tabulated, py::arg("values"), py::arg("epsilon"),
                    py::arg("grid"))
        .def_property_readonly("epsilon", &DelayMap::epsilon)
        .def("tau", &DelayMap::tau_at, py::arg("t"))
        .def("tau_inverse", &DelayMap::tau_inverse_at, py::arg("s"))
        .def("inverse_index_map", &DelayMap::inverse_index_map, py::arg("grid"));

    py::class_<MarketSpec>(m, "MarketSpec")
        .def(py::init([](TimeGrid const& grid, Eigen::VectorXd a_tilde, Eigen::MatrixXd f_tilde) {
                 return MarketSpec(std::move(a_tilde), Kernel(grid, std::move(f_tilde)));
             }),
             py::arg("grid"), py::arg("a_tilde"), py::arg("f_tilde"))
        .def_static("gaussian_drift", &MarketSpec::gaussian_drift, py::arg("grid"), py::arg("mu"),
                    py::arg("sigma2"))
        .def_property_readonly("grid", &MarketSpec::grid)
        .def_property_readonly("a_tilde", [](MarketSpec const& s) { return s.a_tilde(); })
        .def_property_readonly("f_tilde", [](MarketSpec const& s) { return s.f_tilde().values(); });

    py::class_<PreparedMarket>(m, "PreparedMarket")
        .def_property_readonly("spec", [](PreparedMarket const& p) { return p.spec; })
        .def_property_readonly("f", [](PreparedMarket const& p) { return p.f.values(); })
        .def_readonly("a", &PreparedMarket::a)
        .def_readonly("c", &PreparedMarket::c)
        .def_readonly("nonzero_eigs", &PreparedMarket::nonzero_eigs)
        .def_readonly("resolvent_residual", &PreparedMarket::resolvent_residual);

    py::class_<OptimalSolution>(m, "OptimalSolution")
        .def_property_readonly("kappa", [](OptimalSolution const& s) { return s.kappa.values(); })
        .def_property_readonly("g", [](OptimalSolution const& s) { return s.g.values(); })
        .def_property_readonly("g_tilde", [](OptimalSolution const& s) { return s.g_tilde.values(); })
        .def_readonly("value", &OptimalSolution::value)
        .def_readonly("inverse_index", &OptimalSolution::inverse_index)
        .def_property_readonly("diagnostics",
                               [](OptimalSolution const& s) { return diagnostics_dict(s.diagnostics); });

    py::class_<UtilityEstimate>(m, "UtilityEstimate")
        .def_readonly("mean", &UtilityEstimate::mean)
        .def_readonly("std_error", &UtilityEstimate::std_error)
        .def_readonly("n_paths", &UtilityEstimate::n_paths)
        .def_readonly("alpha", &UtilityEstimate::alpha)
        .def_readonly("n_clamped", &UtilityEstimate::n_clamped);

    py::class_<PathEnsemble>(m, "PathEnsemble")
        .def_readonly("seed", &PathEnsemble::seed)
        .def_property_readonly("paths", [](PathEnsemble const& e) { return e.paths; })
        .def("__len__", &PathEnsemble::size);

    m.def("prepare_market", &prepare_market, py::arg("spec"), py::arg("cutoff") = kEigenCutoff);
    m.def("solve", &solve, py::arg("market"), py::arg("delay"),
          py::call_guard<py::gil_scoped_release>());
    m.def("covariance_matrix", &covariance_matrix, py::arg("spec"));
    m.def("mean_vector", &mean_vector, py::arg("spec"));
    m.def("log_rn_derivative", &log_rn_derivative, py::arg("market"), py::arg("path"));
    m.def(
        "evaluate_strategy",
        [](OptimalSolution const& sol, PreparedMarket const& pm, Eigen::VectorXd const& path) {
            return evaluate_strategy(sol, pm.a, path);
        },
        py::arg("solution"), py::arg("market"), py::arg("path"));
    m.def("scale_strategy", &scale_strategy, py::arg("gamma"), py::arg("alpha"));

    m.def(
        "sample_paths",
        [](PreparedMarket const& pm, long n_paths, std::uint64_t seed) { return sample_paths(pm, n_paths, seed); },
        py::arg("market"), py::arg("n_paths"), py::arg("seed"), py::call_guard<py::gil_scoped_release>());
    m.def("estimate_utility", &estimate_utility, py::arg("market"), py::arg("solution"), py::arg("ensemble"),
          py::arg("alpha") = 1.0, py::call_guard<py::gil_scoped_release>());

    auto orc = m.def_submodule("oracle", "Closed-form reference for X = B + tZ, Z ~ N(mu, sigma2) on [0, 1]");
    auto params = [](double mu, double sigma2, DelayMap const& delay) {
        return oracle::ExampleParams(mu, sigma2, delay);
    };
    orc.def(
        "value", [params](double mu, double sigma2, DelayMap const& d) { return oracle::value(params(mu, sigma2, d)); },
        py::arg("mu"), py::arg("sigma2"), py::arg("delay"));
    orc.def(
        "penalty",
        [params](double mu, double sigma2, DelayMap const& d) { return oracle::penalty(params(mu, sigma2, d)); },
        py::arg("mu"), py::arg("sigma2"), py::arg("delay"));
    orc.def(
        "g",
        [params](double mu, double sigma2, DelayMap const& d, double t, double s) {
            return oracle::g(params(mu, sigma2, d), t, s);
        },
        py::arg("mu"), py::arg("sigma2"), py::arg("delay"), py::arg("t"), py::arg("s"));

    m.def(
        "solve_config",
        [](std::string const& path) {
            auto sc = load_scenario(path);
            auto r = solve_scenario(sc);
            return py::make_tuple(r.market, r.solution);
        },
        py::arg("config"));
}
