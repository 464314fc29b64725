#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "entbeam/analysis.hpp"
#include "entbeam/analytic_squeezing.hpp"
#include "entbeam/beam_dynamics.hpp"
#include "entbeam/core_model.hpp"
#include "entbeam/error.hpp"
#include "entbeam/pair_entanglement.hpp"
#include "entbeam/scattering.hpp"

namespace py = pybind11;
using namespace entbeam;

namespace {

SqueezingMethod squeezing_method(const std::string& name) {
    if (name == "analytic") return SqueezingMethod::Analytic;
    if (name == "scattering") return SqueezingMethod::Scattering;
    if (name == "large_mu") return SqueezingMethod::LargeMu;
    throw Error(ErrorCode::Config, "unknown method '" + name + "' (analytic, scattering, large_mu)");
}

py::dict spectrum_arrays(const SpectrumGrid& grid, double big_m, const std::string& method, int jobs) {
    std::vector<GridRow> rows;
    {
        py::gil_scoped_release release;
        rows = spectrum_grid(grid, big_m, squeezing_method(method), jobs);
    }
    const auto n = static_cast<py::ssize_t>(rows.size());
    py::array_t<double> d(n), kappa(n), r(n);
    py::array_t<bool> above(n);
    auto dd = d.mutable_unchecked<1>();
    auto kk = kappa.mutable_unchecked<1>();
    auto rr = r.mutable_unchecked<1>();
    auto aa = above.mutable_unchecked<1>();
    for (py::ssize_t i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        dd(i) = row.d;
        kk(i) = row.kappa;
        rr(i) = row.value.r;
        aa(i) = row.value.above_threshold;
    }
    py::dict out;
    out["d"] = d;
    out["kappa"] = kappa;
    out["r"] = r;
    out["above_threshold"] = above;
    return out;
}

py::dict pair_run(double barrier_height, int n_points, double half_length, double dt) {
    PairSetup s;
    s.grid = GridSpec{-half_length, half_length, n_points, dt, {}, Boundary::Periodic};
    if (barrier_height != 0.0) s.potential_plus = gaussian_barrier(s.grid, barrier_height, -4.0, 0.3);
    PairAmplitude fa;
    QuadrantDecomposition q;
    ProjectedPairState sel;
    BellMetrics m;
    {
        py::gil_scoped_release release;
        fa = pair_amplitude(s);
        q = quadrant_decompose(fa);
        sel = post_select(q);
        m = bell_metrics(sel);
    }
    py::dict out;
    out["fidelity"] = m.fidelity;
    out["chsh"] = m.chsh;
    out["entropy"] = m.entropy;
    out["success_probability"] = sel.success_probability;
    out["weights"] = py::dict(py::arg("LL") = q.w_ll, py::arg("LR") = q.w_lr, py::arg("RL") = q.w_rl,
                              py::arg("RR") = q.w_rr, py::arg("leakage") = q.leakage);
    out["created_norm"] = fa.total_norm;
    return out;
}

}  // namespace

PYBIND11_MODULE(_entbeam, m) {
    m.doc() = "Squeezing, scattering and pair-entanglement solvers for spin-exchange atomic beams";
    m.attr("__version__") = kToolVersion;

    PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
    error_type.call_once_and_store_result([&] { return py::object(py::exception<Error>(m, "EntbeamError")); });
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            const py::object& type = error_type.get_stored();
            py::object exc = type(e.what());
            exc.attr("code") = std::string(to_string(e.code()));
            PyErr_SetObject(type.ptr(), exc.ptr());
        }
    });

    py::class_<PhysicalParams>(m, "PhysicalParams")
        .def(py::init([](double g0, double mu, double a, double m_, double gamma, double n0) {
                 PhysicalParams p{g0, mu, a, m_, gamma, n0};
                 p.validate();
                 return p;
             }),
             py::arg("g0"), py::arg("mu"), py::arg("a"), py::arg("m"), py::arg("gamma") = 0.0, py::arg("n0") = 1.0)
        .def_readwrite("g0", &PhysicalParams::g0)
        .def_readwrite("mu", &PhysicalParams::mu)
        .def_readwrite("a", &PhysicalParams::a)
        .def_readwrite("m", &PhysicalParams::m)
        .def_readwrite("gamma", &PhysicalParams::gamma)
        .def_readwrite("n0", &PhysicalParams::n0)
        .def_static("mu_from_velocity", &PhysicalParams::mu_from_velocity, py::arg("v"), py::arg("m"))
        .def("beam_velocity", &PhysicalParams::beam_velocity);

    py::class_<DimensionlessParams>(m, "DimensionlessParams")
        .def(py::init([](double d, double big_m, double kappa) {
                 DimensionlessParams p{d, big_m, kappa};
                 p.validate();
                 return p;
             }),
             py::arg("d"), py::arg("big_m"), py::arg("kappa"))
        .def_readwrite("d", &DimensionlessParams::d)
        .def_readwrite("big_m", &DimensionlessParams::big_m)
        .def_readwrite("kappa", &DimensionlessParams::kappa)
        .def("__repr__", [](const DimensionlessParams& p) {
            return "DimensionlessParams(d=" + py::repr(py::float_(p.d)).cast<std::string>() +
                   ", big_m=" + py::repr(py::float_(p.big_m)).cast<std::string>() +
                   ", kappa=" + py::repr(py::float_(p.kappa)).cast<std::string>() + ")";
        });

    m.def("to_dimensionless", &to_dimensionless, py::arg("params"), py::arg("delta") = 0.0);
    m.def("transit_time", &transit_time, py::arg("params"));
    m.def("distance_to_threshold", &distance_to_threshold, py::arg("kappa"));

    py::class_<SqueezingValue>(m, "SqueezingValue")
        .def_readonly("r", &SqueezingValue::r)
        .def_readonly("above_threshold", &SqueezingValue::above_threshold)
        .def_readonly("near_threshold", &SqueezingValue::near_threshold)
        .def_readonly("arctanh_argument", &SqueezingValue::arctanh_argument);

    m.def("tanh_two_theta", &tanh_two_theta, py::arg("d"));
    m.def("r_analytic", [](double d, double big_m, double kappa) { return r_analytic({d, big_m, kappa}); },
          py::arg("d"), py::arg("big_m"), py::arg("kappa"));
    m.def("r_large_mu_limit", &r_large_mu_limit, py::arg("d"), py::arg("kappa"));
    m.def("r_zero_detuning", &r_zero_detuning, py::arg("kappa"));
    m.def("threshold_kappas", &threshold_kappas, py::arg("n_max"));
    m.def("loss_rate", &loss_rate, py::arg("r0"), py::arg("g0"), py::arg("n0"));

    py::class_<BogoliubovCoefficients>(m, "BogoliubovCoefficients")
        .def_readonly("alpha_p", &BogoliubovCoefficients::alpha_p)
        .def_readonly("beta_p", &BogoliubovCoefficients::beta_p)
        .def_readonly("alpha_m", &BogoliubovCoefficients::alpha_m)
        .def_readonly("beta_m", &BogoliubovCoefficients::beta_m)
        .def_readonly("condition_number", &BogoliubovCoefficients::condition_number)
        .def_readonly("ill_conditioned", &BogoliubovCoefficients::ill_conditioned)
        .def("plus_norm_residual", &BogoliubovCoefficients::plus_norm_residual)
        .def("minus_norm_residual", &BogoliubovCoefficients::minus_norm_residual)
        .def("cross_residual", &BogoliubovCoefficients::cross_residual)
        .def("squeezing", [](const BogoliubovCoefficients& c) { return r_from_coefficients(c); });

    m.def("solve_scattering",
          [](double d, double big_m, double kappa) { return solve_scattering({d, big_m, kappa}); },
          py::arg("d"), py::arg("big_m"), py::arg("kappa"));

    m.def(
        "spectrum_grid",
        [](double d_min, double d_max, int d_points, double kappa_min, double kappa_max, int kappa_points,
           double big_m, const std::string& method, int jobs) {
            return spectrum_arrays({d_min, d_max, d_points, kappa_min, kappa_max, kappa_points}, big_m, method, jobs);
        },
        py::arg("d_min") = 0.0, py::arg("d_max") = 3.0, py::arg("d_points") = 41, py::arg("kappa_min") = 0.0,
        py::arg("kappa_max") = 1.45, py::arg("kappa_points") = 30, py::arg("big_m") = 100.0,
        py::arg("method") = "analytic", py::arg("jobs") = 1,
        "Squeezing map as flat arrays, kappa-major.");

    m.def(
        "find_thresholds",
        [](double kappa_min, double kappa_max, double d, double big_m, const std::string& method) {
            const auto how = squeezing_method(method);
            auto arg = [&](double k) {
                switch (how) {
                    case SqueezingMethod::LargeMu: return r_large_mu_limit(d, k).arctanh_argument;
                    case SqueezingMethod::Analytic: return r_analytic({d, big_m, k}).arctanh_argument;
                    case SqueezingMethod::Scattering: break;
                }
                const auto c = solve_scattering({d, big_m, k});
                return std::abs(c.beta_p) / std::abs(c.alpha_p);
            };
            py::list out;
            for (const auto& h : find_thresholds(arg, kappa_min, kappa_max))
                out.append(py::dict(py::arg("kappa") = h.kappa, py::arg("nearest") = h.nearest,
                                    py::arg("deviation") = h.deviation));
            return out;
        },
        py::arg("kappa_min") = 0.0, py::arg("kappa_max") = 2.0, py::arg("d") = 0.0, py::arg("big_m") = 100.0,
        py::arg("method") = "large_mu");

    m.def(
        "compare_solvers",
        [](const std::vector<double>& big_m_values, int d_points, int kappa_points, int jobs) {
            std::vector<CompareRow> rows;
            {
                py::gil_scoped_release release;
                rows = compare_solvers({0.0, 3.0, d_points, 0.0, 1.3, kappa_points}, big_m_values, jobs);
            }
            py::list out;
            for (const auto& r : rows)
                out.append(py::dict(py::arg("big_m") = r.big_m, py::arg("max_abs_diff") = r.max_abs_diff,
                                    py::arg("mean_abs_diff") = r.mean_abs_diff, py::arg("worst_d") = r.worst_d,
                                    py::arg("worst_kappa") = r.worst_kappa));
            return out;
        },
        py::arg("big_m_values"), py::arg("d_points") = 31, py::arg("kappa_points") = 27, py::arg("jobs") = 1);

    m.def(
        "flux_estimate",
        [](const PhysicalParams& p, double d_max, int points) {
            const auto red = to_dimensionless(p, 0.0);
            const auto spec = squeezing_spectrum(SpectrumGrid{0.0, d_max, points, 0.0, 0.0, 1}.d_values(), red.big_m,
                                                 red.kappa, SqueezingMethod::Analytic);
            return flux_estimate(spec, p.g0);
        },
        py::arg("params"), py::arg("d_max") = 3.0, py::arg("points") = 301,
        "Order-of-magnitude output flux in atoms/s.");
    m.attr("FLUX_DEFINITION") = kFluxDefinition;

    m.def(
        "steady_output",
        [](double gamma, double big_m, double kappa) {
            SteadyOutputSetup s;
            s.gamma = gamma;
            s.model = {big_m, kappa};
            SteadyOutputResult r;
            {
                py::gil_scoped_release release;
                r = run_steady_output(s);
            }
            return py::dict(py::arg("beta_sq_time_domain") = r.beta_sq_time_domain,
                            py::arg("beta_sq_stderr") = r.beta_sq_stderr,
                            py::arg("alpha_sq_time_domain") = r.alpha_sq_time_domain,
                            py::arg("beta_sq_frequency_domain") = r.beta_sq_frequency_domain,
                            py::arg("relative_error") = r.relative_error);
        },
        py::arg("gamma"), py::arg("big_m") = 20.0, py::arg("kappa") = 1.0);

    m.def("pair_metrics", &pair_run, py::arg("barrier_height") = 0.0, py::arg("n_points") = 512,
          py::arg("half_length") = 24.0, py::arg("dt") = 0.01,
          "Post-selected Bell metrics of the pair amplitude; a barrier acts on the +1 state left of the source.");

    m.def("sha256_hex", [](const py::bytes& b) { return sha256_hex(std::string(b)); });
}
