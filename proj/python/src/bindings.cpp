#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "shapelab/embedding_diagnostics.hpp"
#include "shapelab/experiment.hpp"
#include "shapelab/gaussian_models.hpp"
#include "shapelab/generated_space.hpp"
#include "shapelab/grid_function.hpp"
#include "shapelab/parallel.hpp"
#include "shapelab/shape_functions.hpp"

namespace py = pybind11;
using namespace shapelab;
using nlohmann::json;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::object& o) {
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

template <typename R>
py::object report(const R& r) {
  return to_py(to_json(r));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Shape functions, atom-generated spaces and Gaussian embedding diagnostics.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("set_worker_count", &set_worker_count, py::arg("workers"));
  m.def("worker_count", &worker_count);

  py::class_<GridFunction>(m, "GridFunction")
      .def(py::init<int, Vector>(), py::arg("level"), py::arg("values"))
      .def_static("sample", &GridFunction::sample, py::arg("level"), py::arg("f"))
      .def_property_readonly("level", &GridFunction::level)
      .def_property_readonly("values", &GridFunction::values)
      .def("__len__", [](const GridFunction& f) { return f.values().size(); });

  m.def("sup_norm", &sup_norm, py::arg("f"));
  m.def("holder_norm", [](const GridFunction& f, double alpha) { return holder_norm(f, alpha); },
        py::arg("f"), py::arg("alpha"));
  m.def("modulus_of_continuity", &modulus_of_continuity, py::arg("f"), py::arg("delta"));
  m.def("small_holder_defect", &small_holder_defect, py::arg("f"), py::arg("alpha"), py::arg("delta"));
  m.def("h12_norm", &h12_norm, py::arg("f"));
  m.def("refine", &refine, py::arg("f"));

  m.def("sample_wiener", [](int level, std::uint64_t seed) { return sample_wiener({level, seed}); },
        py::arg("level"), py::arg("seed"));
  m.def("bridge_refine", &bridge_refine, py::arg("f"), py::arg("seed"));
  m.def("sample_kl", &sample_kl, py::arg("modes"), py::arg("level"), py::arg("seed"));

  py::class_<GaussianSpace>(m, "GaussianSpace")
      .def_property_readonly("kind", &GaussianSpace::kind)
      .def_property_readonly("dim", &GaussianSpace::dim)
      .def("metric", &GaussianSpace::metric, py::arg("x"))
      .def("cm_norm", &GaussianSpace::cm_norm, py::arg("x"))
      .def("sample_measure", &GaussianSpace::sample_measure, py::arg("seed"))
      .def("sample_sphere", [](const GaussianSpace& s, std::uint64_t seed) { return sample_sphere_H(s, seed).point; },
           py::arg("seed"))
      .def("describe", [](const GaussianSpace& s) { return to_py(s.describe()); });
  py::class_<WienerSpace, GaussianSpace>(m, "WienerSpace")
      .def(py::init<int, int>(), py::arg("level") = 8, py::arg("kl_modes") = kDefaultKlModes);
  py::class_<SequenceSpace, GaussianSpace>(m, "SequenceSpace")
      .def(py::init<int>(), py::arg("dim") = kDefaultSequenceDim)
      .def(py::init<Vector, Vector>(), py::arg("sigma"), py::arg("weights"));

  py::class_<ShapeFunction>(m, "ShapeFunction")
      .def_readonly("name", &ShapeFunction::name)
      .def_readonly("role", &ShapeFunction::role)
      .def_property_readonly("params", [](const ShapeFunction& s) { return to_py(s.params); });
  m.def("parse_shape", &parse_shape, py::arg("spec"));
  m.def("eval_shape",
        [](const ShapeFunction& phi, const GaussianSpace& space, const Vector& x) {
          return eval_shape(phi, space, make_cm_vector(space, x));
        },
        py::arg("phi"), py::arg("space"), py::arg("x"));
  m.def("check_shape",
        [](const ShapeFunction& phi, const GaussianSpace& space, std::size_t samples, std::uint64_t seed) {
          json out = json::array();
          for (const auto& r : check_all(phi, space, default_schedule(phi, space), samples, seed)) {
            out.push_back(to_json(r));
          }
          return to_py(out);
        },
        py::arg("phi"), py::arg("space"), py::arg("samples"), py::arg("seed"));

  py::class_<AtomSet>(m, "AtomSet")
      .def(py::init([](Eigen::MatrixXd g) { return AtomSet(std::move(g), json::object()); }), py::arg("generators"))
      .def_property_readonly("generators", &AtomSet::generators)
      .def_property_readonly("ambient_dim", &AtomSet::ambient_dim)
      .def("__len__", &AtomSet::size)
      .def("atom", &AtomSet::atom, py::arg("index"))
      .def("prefix", &AtomSet::prefix, py::arg("m"))
      .def_property_readonly("provenance", [](const AtomSet& a) { return to_py(a.provenance()); });
  m.def("build_atoms", &build_atoms, py::arg("phi"), py::arg("space"), py::arg("m"), py::arg("seed"));

  py::class_<GaugeEngine>(m, "GaugeEngine")
      .def(py::init<AtomSet>(), py::arg("atoms"))
      .def_property_readonly("rank", &GaugeEngine::rank)
      .def("__call__", [](const GaugeEngine& e, const Vector& x) {
        GaugeResult r;
        {
          py::gil_scoped_release release;
          r = e(x);
        }
        return report(r);
      }, py::arg("x"))
      .def("value", [](const GaugeEngine& e, const Vector& x) {
        py::gil_scoped_release release;
        return e(x).value;
      }, py::arg("x"));
  m.def("gauge", [](const Vector& x, const AtomSet& atoms) { return report(gauge(x, atoms)); }, py::arg("x"),
        py::arg("atoms"));
  m.def("vertex_enumeration_gauge", &vertex_enumeration_gauge, py::arg("x"), py::arg("atoms"));

  m.def("greedy_net",
        [](const std::vector<Vector>& points, double eps, const std::string& metric) {
          const auto dim = points.empty() ? 1 : points.front().size();
          return report(greedy_net(points, eps, parse_net_metric(metric, dim)));
        },
        py::arg("points"), py::arg("epsilon"), py::arg("metric") = "sup");
  m.def("full_measure_mc",
        [](double alpha, const std::vector<double>& radii, std::size_t n, int level, std::uint64_t seed) {
          return report(full_measure_mc(alpha, radii, n, level, seed));
        },
        py::arg("alpha"), py::arg("radii"), py::arg("samples"), py::arg("level"), py::arg("seed"));
  m.def("dichotomy_sweep",
        [](const std::vector<double>& alphas, const std::vector<int>& levels, std::size_t n, std::uint64_t seed) {
          return report(dichotomy_sweep(alphas, levels, n, seed));
        },
        py::arg("alphas"), py::arg("levels"), py::arg("samples"), py::arg("seed"));
  m.def("cs_bound_check",
        [](std::size_t n, int level, std::uint64_t seed) { return report(cs_bound_check(n, level, seed)); },
        py::arg("samples"), py::arg("level"), py::arg("seed"));
  m.def("small_ball_holder_bound",
        [](const std::vector<double>& eps, double alpha, std::size_t n, int level, std::uint64_t seed) {
          return report(small_ball_holder_bound(eps, alpha, n, level, seed));
        },
        py::arg("eps"), py::arg("alpha"), py::arg("samples"), py::arg("level"), py::arg("seed"));
  m.def("containment_witnesses",
        [](const std::vector<int>& levels, std::size_t n, std::uint64_t seed) {
          return report(containment_witnesses(levels, n, seed));
        },
        py::arg("levels"), py::arg("samples"), py::arg("seed"));
  m.def("small_holder_membership",
        [](double alpha, const std::vector<double>& deltas, std::size_t n, int level, std::uint64_t seed) {
          return report(small_holder_membership(alpha, deltas, n, level, seed));
        },
        py::arg("alpha"), py::arg("deltas"), py::arg("samples"), py::arg("level"), py::arg("seed"));

  m.def("validate_config", [](const py::object& doc) { return validate_config(from_py(doc)); }, py::arg("config"));
  m.def("normalize_config", [](const py::object& doc) { return to_py(to_json(parse_config(from_py(doc)))); },
        py::arg("config"));
  m.def("run_config",
        [](const py::object& doc, const std::string& out_dir) {
          const auto config = parse_config(from_py(doc));
          ResultManifest manifest;
          {
            py::gil_scoped_release release;
            manifest = run(config, out_dir);
          }
          return to_py(to_json(manifest));
        },
        py::arg("config"), py::arg("out_dir"));
  m.def("list_builtins", [] { return to_py(list_builtins()); });
  m.def("config_schema", [] { return to_py(config_schema()); });
  m.def("sha256_hex", &sha256_hex, py::arg("data"));
  m.attr("__version__") = kToolVersion;
}
