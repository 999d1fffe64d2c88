// Python bindings. Results cross the boundary as JSON text and are decoded in
// uarmpe/__init__.py.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "uarmpe/errors.hpp"
#include "uarmpe/generate.hpp"
#include "uarmpe/io.hpp"
#include "uarmpe/pipeline.hpp"
#include "uarmpe/shatter.hpp"
#include "uarmpe/symbolic.hpp"
#include "uarmpe/uar.hpp"

namespace py = pybind11;
using namespace uarmpe;

namespace {

SolveOptions make_options(const std::string& engine, bool use_uar, std::optional<std::string> condition,
                          bool auto_condition) {
  SolveOptions o;
  o.engine = parse_engine(engine);
  o.use_uar = use_uar;
  o.condition = std::move(condition);
  o.auto_condition = auto_condition;
  return o;
}

}  // namespace

PYBIND11_MODULE(_uarmpe, m) {
  m.doc() = "Parfactor models and MPE with uniform assignment reduction";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", error.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", error.ptr());
  auto budget = py::register_exception<BudgetExceeded>(m, "BudgetExceeded", error.ptr());
  py::register_exception<MemoryBudgetExceeded>(m, "MemoryBudgetExceeded", budget.ptr());
  py::register_exception<FixpointBudgetExceeded>(m, "FixpointBudgetExceeded", error.ptr());
  py::register_exception<ConsistencyFailure>(m, "ConsistencyFailure", error.ptr());
  py::register_exception<UnsupportedShape>(m, "UnsupportedShape", error.ptr());

  py::class_<Model>(m, "Model")
      .def_static("parse", [](const std::string& text) { return parse_model(text); }, py::arg("text"))
      .def_static("load", &load_model, py::arg("path"))
      .def("serialize", &serialize_model)
      .def("validate", [](const Model& self) { return validate_model(self).to_string(); })
      .def("parfactors",
           [](const Model& self) {
             std::vector<std::string> out;
             for (const auto& g : self.parfactors) out.push_back(format_parfactor(self, g));
             return out;
           })
      .def("with_domain_size", &with_domain_size, py::arg("size"))
      .def("__eq__", [](const Model& a, const Model& b) { return structurally_equal(a, b); })
      .def("__repr__", &serialize_model);

  m.def("gen_random", &gen_random, py::arg("n_parfactors"), py::arg("domain_size"), py::arg("seed"));
  m.def("shatter", [](const Model& model) { return shatter(model).model; }, py::arg("model"));

  m.def(
      "_simplify",
      [](const Model& model) {
        const SimplifyResult r = simplify(shatter(model).model);
        return py::make_tuple(r.model, reduction_map_json(r.map, -1), format_trace(r.trace));
      },
      py::arg("model"));

  m.def(
      "_solve",
      [](const Model& model, const std::string& engine, bool use_uar, std::optional<std::string> condition,
         bool auto_condition) {
        py::gil_scoped_release release;
        return solve_result_json(model, solve(model, make_options(engine, use_uar, condition, auto_condition)), -1);
      },
      py::arg("model"), py::arg("engine"), py::arg("use_uar"), py::arg("condition"), py::arg("auto_condition"));

  m.def(
      "_conditional_solve",
      [](const Model& model, const std::string& target, const std::string& engine) {
        py::gil_scoped_release release;
        return solve_result_json(model, conditional_ua_solve(model, target, make_options(engine, true, {}, false)), -1);
      },
      py::arg("model"), py::arg("target"), py::arg("engine"));

  m.def(
      "_weight",
      [](const Model& model, const std::string& assignment) {
        return model_weight(model, assignment_from_json(model, assignment));
      },
      py::arg("model"), py::arg("assignment"));
}
