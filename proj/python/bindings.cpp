#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mcv/parser.hpp"
#include "mcv/printer.hpp"
#include "mcv/report.hpp"

namespace py = pybind11;
using namespace mcv;

namespace {

py::object failure_dict(const Obligation &o) {
  if (!o.failure) return py::none();
  const Diagnostic &d = *o.failure;
  py::dict f;
  f["category"] = std::string(category_name(d.category));
  f["line"] = d.loc.line;
  f["col"] = d.loc.col;
  f["message"] = d.message;
  f["conjunct"] = d.conjunct;
  f["heap"] = d.heap;
  return f;
}

VerifyOptions options(bool stop) {
  VerifyOptions o;
  o.stop_on_first_error = stop;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "MiniCpp separation-logic verifier";

  py::class_<Diagnostic>(m, "Diagnostic")
      .def_property_readonly("category", [](const Diagnostic &d) { return std::string(category_name(d.category)); })
      .def_property_readonly("line", [](const Diagnostic &d) { return d.loc.line; })
      .def_property_readonly("col", [](const Diagnostic &d) { return d.loc.col; })
      .def_readonly("message", &Diagnostic::message)
      .def("__str__", &Diagnostic::str);

  py::class_<Obligation>(m, "Obligation")
      .def_readonly("subject", &Obligation::subject)
      .def_property_readonly("kind", [](const Obligation &o) { return std::string(obligation_kind_name(o.kind)); })
      .def_property_readonly("verdict", &Obligation::verdict)
      .def_property_readonly("verified", &Obligation::verified)
      .def_property_readonly("line", [](const Obligation &o) { return o.loc.line; })
      .def_property_readonly("col", [](const Obligation &o) { return o.loc.col; })
      .def_property_readonly("failure", &failure_dict)
      .def("__repr__", [](const Obligation &o) { return "<Obligation " + o.subject + ": " + o.verdict() + ">"; });

  py::class_<FileReport>(m, "FileReport")
      .def_readonly("path", &FileReport::path)
      .def_readonly("errors", &FileReport::errors)
      .def_readonly("obligations", &FileReport::obligations)
      .def_property_readonly("verified", &FileReport::verified)
      .def_property_readonly("categories",
                             [](const FileReport &r) {
                               std::vector<std::string> out;
                               for (Category c : r.categories()) out.emplace_back(category_name(c));
                               return out;
                             })
      .def("text", [](const FileReport &r) { return render_text({r}); })
      .def("structured", [](const FileReport &r, bool trace) { return render_structured({r}, trace); },
           py::arg("trace") = false);

  m.def(
      "verify_source",
      [](const std::string &text, const std::string &path, bool stop) {
        return verify_source(text, path, options(stop));
      },
      py::arg("text"), py::arg("path") = "<string>", py::arg("stop_on_first_error") = false);
  m.def(
      "verify_file", [](const std::string &path, bool stop) { return verify_file(path, options(stop)); },
      py::arg("path"), py::arg("stop_on_first_error") = false);
  m.def("exit_code", &exit_code);
  m.def(
      "render_structured", [](const std::vector<FileReport> &r, bool trace) { return render_structured(r, trace); },
      py::arg("reports"), py::arg("trace") = false);
  m.def("format_assertion", [](const std::string &text) { return to_source(*parse_assertion(text)); });

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const DiagnosticError &e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });
}
