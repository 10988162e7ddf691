#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stringbreak/commands.hpp"
#include "stringbreak/config.hpp"
#include "stringbreak/dynamics.hpp"
#include "stringbreak/errors.hpp"
#include "stringbreak/statics.hpp"

namespace py = pybind11;
using namespace stringbreak;

namespace {

ChainSpec make_chain(int ell, const CouplingKernel& kernel, const std::string& boundary, int n_ext) {
  if (boundary == "static") return ChainSpec(ell, kernel);
  if (boundary == "dynamical") return ChainSpec(ell, kernel, DynamicalExternal{n_ext});
  throw ValidationError("boundary must be 'static' or 'dynamical'");
}

py::array_t<double> as_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

py::array_t<double> as_matrix(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size(), m = n ? rows[0].size() : 0;
  py::array_t<double> out({n, m});
  auto a = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) a(i, j) = rows[i][j];
  }
  return out;
}

py::dict crossing_dict(const CrossingFit& f) {
  py::dict d;
  d["control_c"] = f.control_c;
  d["gap_c"] = f.gap_c;
  d["slope"] = f.slope;
  d["residual"] = f.residual;
  d["gap_min"] = f.gap_min;
  d["x_min"] = f.x_min;
  d["window"] = py::make_tuple(f.window_lo, f.window_hi);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "String breaking in quantum Ising chains";
  m.attr("__version__") = version_string();

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto validation = py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  (void)validation;

  py::class_<CouplingKernel>(m, "CouplingKernel")
      .def_static("exponential", &CouplingKernel::exponential, py::arg("xi"))
      .def_static("power_law", &CouplingKernel::power_law, py::arg("alpha"))
      .def_property_readonly("is_exponential", &CouplingKernel::is_exponential)
      .def_property_readonly("parameter", &CouplingKernel::parameter)
      .def("__call__", &CouplingKernel::operator(), py::arg("d"))
      .def("tail_sum", &CouplingKernel::tail_sum, py::arg("first"))
      .def("__repr__", &CouplingKernel::describe);

  py::class_<ChainSpec>(m, "ChainSpec")
      .def(py::init(&make_chain), py::arg("ell"), py::arg("kernel"), py::arg("boundary") = "static",
           py::arg("n_ext") = 3)
      .def_property_readonly("ell", &ChainSpec::ell)
      .def_property_readonly("num_dynamical", &ChainSpec::num_dynamical)
      .def_property_readonly("dynamical_positions", &ChainSpec::dynamical_positions)
      .def_property_readonly("inner_bits", &ChainSpec::inner_bits);

  m.def("effective_field", [](const ChainSpec& c) { return as_array(effective_field(c)); });
  m.def("vacuum_field", [](const ChainSpec& c) { return as_array(vacuum_field(c)); });

  m.def("g0_energy_gap", &g0_energy_gap, py::arg("chain"), py::arg("h") = 0.0);
  m.def("g0_breaking_field", &g0_breaking_field, py::arg("chain"));
  m.def("bubble_crossing_fields",
        [](const ChainSpec& c, bool compact) {
          return as_array(bubble_crossing_fields(
              c, compact ? EnergyConvention::Compact : EnergyConvention::FirstPrinciples));
        },
        py::arg("chain"), py::arg("compact_convention") = false);
  m.def("alpha_min_root", [] { return alpha_min_root(); });
  m.def("alpha_max_root", [] { return alpha_max_root(); });

  m.def("lowest_spectrum",
        [](const ChainSpec& c, double h, double g, int k) {
          const IsingHamiltonian ham(c, make_fields(c, h, g));
          const auto s = lowest_spectrum(ham, k, false);
          return py::make_tuple(as_array(s.energies), as_array(s.magnetizations));
        },
        py::arg("chain"), py::arg("h"), py::arg("g"), py::arg("k") = 2,
        "Lowest k energies and per-site magnetizations.");

  m.def("locate_avoided_crossing",
        [](const ChainSpec& c, double fixed, double lo, double hi, const std::string& scan) {
          if (scan != "h" && scan != "g") throw ValidationError("scan must be 'h' or 'g'");
          return crossing_dict(locate_avoided_crossing(c, fixed, lo, hi,
                                                       scan == "h" ? ScanMode::ScanH : ScanMode::ScanG));
        },
        py::arg("chain"), py::arg("fixed"), py::arg("lo"), py::arg("hi"), py::arg("scan") = "h");

  m.def("landau_zener_probability", &landau_zener_probability, py::arg("gap_c"), py::arg("slope"),
        py::arg("tau"));
  m.def("landau_zener_time", &landau_zener_time, py::arg("gap_c"), py::arg("slope"));

  m.def("propagate_ramp",
        [](const ChainSpec& c, double g, double tau, double h_final, int samples, int levels,
           double step_dt) {
          RampSchedule s;
          s.fixed = g;
          s.tau = tau;
          s.final_value = h_final;
          s.samples = samples;
          PropagatorConfig cfg;
          cfg.step_dt = step_dt;
          ObservableOptions obs;
          obs.levels = levels;
          obs.potential = false;
          RampResult r;
          {
            py::gil_scoped_release release;
            r = propagate_ramp(c, s, cfg, obs);
          }
          std::vector<double> t, control, mz;
          std::vector<std::vector<double>> pops, bubbles, profile;
          for (const auto& x : r.samples) {
            t.push_back(x.t);
            control.push_back(x.control);
            mz.push_back(x.m_z);
            pops.push_back(x.populations);
            bubbles.push_back(x.bubbles);
            profile.push_back(x.profile);
          }
          py::dict d;
          d["t"] = as_array(t);
          d["control"] = as_array(control);
          d["m_z"] = as_array(mz);
          d["profile"] = as_matrix(profile);
          d["populations"] = as_matrix(pops);
          d["bubbles"] = as_matrix(bubbles);
          d["max_norm_error"] = r.max_norm_error;
          return d;
        },
        py::arg("chain"), py::arg("g"), py::arg("tau"), py::arg("h_final"), py::arg("samples") = 201,
        py::arg("levels") = 2, py::arg("step_dt") = 0.01,
        "Linear h ramp from 0 starting in the ground state.");

  m.def("command_names", &command_names);
  m.def("schema_help", &schema_help, py::arg("command"));
  m.def("run_command",
        [](const std::string& text, const std::map<std::string, std::string>& overrides,
           const std::string& command) {
          Overrides ov(overrides.begin(), overrides.end());
          const auto config = parse_config(text, ov, command);
          CommandReport rep;
          {
            py::gil_scoped_release release;
            rep = run_command(config);
          }
          return py::module_::import("json").attr("loads")(rep.results.dump());
        },
        py::arg("config_text"), py::arg("overrides") = std::map<std::string, std::string>{},
        py::arg("command") = "",
        "Parse key=value text, run the command, return its results dict.");
  m.def("serialize_config",
        [](const std::string& text, const std::map<std::string, std::string>& overrides,
           const std::string& command) {
          Overrides ov(overrides.begin(), overrides.end());
          return serialize(parse_config(text, ov, command));
        },
        py::arg("config_text"), py::arg("overrides") = std::map<std::string, std::string>{},
        py::arg("command") = "");
}
