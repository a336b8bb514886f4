#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "hamlearn/data_pipeline.hpp"
#include "hamlearn/errors.hpp"
#include "hamlearn/experiment.hpp"
#include "hamlearn/io.hpp"
#include "hamlearn/learner.hpp"
#include "hamlearn/poly_basis.hpp"
#include "hamlearn/rk4.hpp"
#include "hamlearn/systems.hpp"

namespace py = pybind11;
using namespace hamlearn;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> as_vector(const Array& a) {
  return std::vector<double>(a.data(), a.data() + a.size());
}

Array matrix(const std::vector<double>& flat, std::size_t cols) {
  Array out({flat.size() / cols, cols});
  std::copy(flat.begin(), flat.end(), out.mutable_data());
  return out;
}

DomainPolicy policy_from(const std::string& s) {
  if (s == "strict") return DomainPolicy::kStrict;
  if (s == "clamp") return DomainPolicy::kClamp;
  if (s == "extrapolate") return DomainPolicy::kExtrapolate;
  throw ArgumentError("unknown domain policy '" + s + "'");
}

DataPairSet pairs_from(const Array& states, const Array& derivatives) {
  if (states.ndim() != 2 || derivatives.ndim() != 2 || states.shape(0) != derivatives.shape(0) ||
      states.shape(1) != derivatives.shape(1) || states.shape(1) % 2 != 0)
    throw ArgumentError("states and derivatives must be matching K x 2d arrays");
  DataPairSet pairs;
  pairs.dim_d = static_cast<int>(states.shape(1) / 2);
  const auto w = static_cast<std::size_t>(states.shape(1));
  for (py::ssize_t k = 0; k < states.shape(0); ++k) {
    pairs.push_back(static_cast<std::size_t>(k), 0.0,
                    std::span<const double>(states.data(k, 0), w),
                    std::span<const double>(derivatives.data(k, 0), w));
  }
  pairs.validate();
  return pairs;
}

ExperimentConfig config_from(const std::string& json_text) {
  return ExperimentConfig::from_json(nlohmann::json::parse(json_text));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Structure-preserving Hamiltonian learning";

  auto& base = py::register_exception<Error>(m, "HamlearnError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ArgumentError>(m, "ArgumentError", base.ptr());

  m.def("builtin_names", &builtin_names);

  m.def("energy", [](const std::string& name, const Array& u) {
    return builtin_system(name).hamiltonian(as_vector(u));
  });
  m.def("rhs", [](const std::string& name, const Array& u) {
    return builtin_system(name).rhs_at(as_vector(u));
  });
  m.def("default_domain", [](const std::string& name) {
    const auto box = builtin_system(name).default_domain;
    return py::make_tuple(box.lower(), box.upper());
  });

  m.def(
      "integrate",
      [](const std::string& name, const Array& u0, double step, double horizon) {
        const auto sys = builtin_system(name);
        const auto traj = integrate(sys.rhs, StateVector(as_vector(u0)), step, horizon);
        std::vector<double> flat;
        for (const auto& s : traj.states) flat.insert(flat.end(), s.vec().begin(), s.vec().end());
        return py::make_tuple(py::array(py::cast(traj.times)), matrix(flat, u0.size()));
      },
      py::arg("system"), py::arg("u0"), py::arg("step"), py::arg("horizon"));

  py::class_<TotalDegreeBasis>(m, "Basis")
      .def(py::init([](int degree, std::vector<double> lower, std::vector<double> upper,
                       const std::string& policy) {
             return TotalDegreeBasis(degree, DomainBox(std::move(lower), std::move(upper)),
                                     policy_from(policy));
           }),
           py::arg("degree"), py::arg("lower"), py::arg("upper"), py::arg("policy") = "strict")
      .def_property_readonly("degree", &TotalDegreeBasis::degree)
      .def_property_readonly("dims", &TotalDegreeBasis::dims)
      .def_property_readonly("dim_w", &TotalDegreeBasis::dim_w)
      .def_property_readonly("dim_v", &TotalDegreeBasis::dim_v)
      .def_property_readonly("indices",
                             [](const TotalDegreeBasis& b) {
                               std::vector<std::vector<int>> out;
                               for (const auto& i : b.indices()) out.push_back(i.exponents);
                               return out;
                             })
      .def("eval", [](const TotalDegreeBasis& b, std::size_t j, const Array& x) {
        return b.eval(j, as_vector(x));
      })
      .def("grad", [](const TotalDegreeBasis& b, std::size_t j, const Array& x) {
        return b.grad(j, as_vector(x));
      });

  py::class_<HamiltonianModel>(m, "Model")
      .def_property_readonly("coefficients", &HamiltonianModel::coefficients)
      .def_readonly("pairs_hash", &HamiltonianModel::pairs_hash)
      .def_readonly("pair_count", &HamiltonianModel::pair_count)
      .def_property_readonly("rank", [](const HamiltonianModel& h) { return h.solver_report().rank; })
      .def_property_readonly("basis", &HamiltonianModel::basis)
      .def("eval", [](const HamiltonianModel& h, const Array& x) { return h.eval(as_vector(x)); })
      .def("grad", [](const HamiltonianModel& h, const Array& x) { return h.grad(as_vector(x)); })
      .def("rhs",
           [](const HamiltonianModel& h, const Array& x) {
             return apply_j_inverse(h.grad(as_vector(x)));
           })
      .def("save", [](const HamiltonianModel& h, const std::string& path) { save_model(h, path); })
      .def_static("load", [](const std::string& path) { return load_model(path); });

  m.def(
      "fit",
      [](const Array& states, const Array& derivatives, const TotalDegreeBasis& basis,
         double rel_tol) { return fit_hamiltonian(pairs_from(states, derivatives), basis, rel_tol); },
      py::arg("states"), py::arg("derivatives"), py::arg("basis"), py::arg("rel_tol") = 1e-10);

  m.def(
      "check_stability",
      [](double kn, std::size_t k, double r) {
        const auto s = check_stability(kn, k, r);
        py::dict d;
        d["lambda"] = s.lambda;
        d["threshold"] = s.threshold;
        d["satisfied"] = s.satisfied;
        return d;
      },
      py::arg("kn"), py::arg("sample_count"), py::arg("r") = 1.0);

  m.def("preset_names", &preset_names);
  m.def("preset_json", [](const std::string& name) { return preset(name).to_json().dump(); });
  m.def("normalize_config_json",
        [](const std::string& text) { return config_from(text).to_json().dump(); });

  m.def(
      "run_json",
      [](const std::string& text, const std::string& out_dir) {
        const auto cfg = config_from(text);
        ExperimentReport report;
        {
          py::gil_scoped_release release;
          report = run_experiment(cfg);
          if (!out_dir.empty()) emit_outputs(report, out_dir);
        }
        return report.summary().dump();
      },
      py::arg("config"), py::arg("out_dir") = "");

  m.def(
      "converge_json",
      [](const std::string& text, std::vector<double> steps) {
        const auto cfg = config_from(text);
        ConvergenceStudy study;
        {
          py::gil_scoped_release release;
          study = run_convergence_study(cfg, std::move(steps));
        }
        return study.to_json().dump();
      },
      py::arg("config"), py::arg("steps"));
}
