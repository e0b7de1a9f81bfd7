#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "hdivred/driver.hpp"
#include "hdivred/errors.hpp"
#include "hdivred/matrix_market.hpp"
#include "hdivred/reduction.hpp"
#include "hdivred/verify.hpp"

namespace py = pybind11;
using namespace hdivred;

namespace {

RunConfig config_from_dict(const py::dict& d) {
  RunConfig c;
  auto set_axes = [&](const char* key, auto& target) {
    if (!d.contains(key)) return;
    const py::object v = d[key];
    if (py::isinstance<py::sequence>(v) && !py::isinstance<py::str>(v)) {
      auto seq = v.cast<py::sequence>();
      for (std::size_t a = 0; a < seq.size() && a < 3; ++a)
        target[a] = seq[a].cast<typename std::decay_t<decltype(target)>::value_type>();
    } else {
      const auto x = v.cast<typename std::decay_t<decltype(target)>::value_type>();
      target[0] = target[1] = target[2] = x;
    }
  };
  if (d.contains("dim")) c.dim = d["dim"].cast<int>();
  set_axes("cells", c.cells);
  set_axes("sizes", c.sizes);
  set_axes("origin", c.origin);
  set_axes("g", c.g);
  if (d.contains("order")) c.order = d["order"].cast<int>();
  if (d.contains("coeff_preset")) c.coeff_preset = d["coeff_preset"].cast<std::string>();
  if (d.contains("p")) c.p = d["p"].cast<int>();
  if (d.contains("alpha")) c.alpha = d["alpha"].cast<double>();
  if (d.contains("beta")) c.beta = d["beta"].cast<double>();
  if (d.contains("coeff_file")) c.coeff_file = d["coeff_file"].cast<std::string>();
  if (d.contains("method")) c.method = method_from_string(d["method"].cast<std::string>());
  if (d.contains("weighted")) c.weighted = d["weighted"].cast<bool>();
  if (d.contains("preconditioner")) c.preconditioner = precond_from_string(d["preconditioner"].cast<std::string>());
  if (d.contains("rtol")) c.rtol = d["rtol"].cast<double>();
  if (d.contains("maxit")) c.maxit = d["maxit"].cast<index_t>();
  if (d.contains("essential_boundary")) c.essential_boundary = d["essential_boundary"].cast<bool>();
  if (d.contains("output")) c.output = d["output"].cast<std::string>();
  return c;
}

py::dict record_to_dict(const BenchRecord& r) {
  py::dict d;
  d["method"] = r.method;
  d["order"] = r.order;
  d["p"] = r.p;
  d["ndofs"] = r.ndofs;
  d["reduced_size"] = r.reduced_size;
  d["setup_time"] = r.setup_time;
  d["solve_time"] = r.solve_time;
  d["recover_time"] = r.recover_time;
  d["total_time"] = r.total_time;
  d["iterations"] = r.iterations;
  d["final_relative_residual"] = r.final_relative_residual;
  d["solution_checksum"] = r.solution_checksum;
  return d;
}

py::tuple csr_to_tuple(const CsrMatrix& a) {
  return py::make_tuple(a.nrows, a.ncols, a.row_offsets, a.col_indices, a.values);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "H(div) solver toolkit: algebraic hybridization and static condensation";

  py::register_exception<SingularBlock>(m, "SingularBlockError");
  py::register_exception<CapExceeded>(m, "CapExceededError");
  py::register_exception<FormatError>(m, "FormatError");
  py::register_exception<ValidationError>(m, "ValidationError");

  m.def(
      "space_info",
      [](int dim, std::vector<index_t> cells, int order) {
        while (cells.size() < 3) cells.push_back(1);
        std::array<double, 3> sizes{1.0, 1.0, 1.0};
        for (int a = 0; a < dim; ++a) sizes[static_cast<std::size_t>(a)] = 1.0 / static_cast<double>(cells[static_cast<std::size_t>(a)]);
        const CartesianMesh mesh = build_mesh(dim, {cells[0], cells[1], cells[2]}, sizes);
        const RtSpace space = build_space(mesh, order);
        py::dict d;
        d["ncells"] = mesh.ncells();
        d["nfaces"] = mesh.nfaces();
        d["ndofs"] = space.ndofs;
        d["broken_ndofs"] = space.broken_ndofs;
        d["dofs_per_face"] = space.dofs_per_face;
        d["interior_dofs_per_cell"] = space.interior_dofs_per_cell;
        return d;
      },
      py::arg("dim"), py::arg("cells"), py::arg("order"),
      "Dof counts of the Raviart-Thomas space on a unit-cube mesh");

  m.def(
      "solve",
      [](const py::dict& config) {
        const SolveResult result = run_solve(config_from_dict(config));
        py::dict d = record_to_dict(result.record);
        d["converged"] = result.converged;
        d["solution"] = result.solution;
        return d;
      },
      py::arg("config"), "End-to-end solve; returns the run record with the solution vector attached");

  m.def(
      "bench",
      [](std::vector<index_t> meshes, std::vector<int> p_values, std::vector<std::string> methods, int order,
         bool weighted, const std::string& precond, double rtol, index_t maxit) {
        std::vector<Method> ms;
        for (const auto& s : methods) ms.push_back(method_from_string(s));
        const auto records =
            run_bench(meshes, p_values, ms, order, weighted, precond_from_string(precond), rtol, maxit);
        py::list out;
        for (const auto& r : records) out.append(record_to_dict(r));
        return out;
      },
      py::arg("meshes"), py::arg("p_values"), py::arg("methods") = std::vector<std::string>{"hybridization"},
      py::arg("order") = 0, py::arg("weighted") = false, py::arg("precond") = "amg", py::arg("rtol") = 1e-12,
      py::arg("maxit") = 2000, "Soft-hard coefficient-jump sweep; returns one record per (mesh, p, method)");

  m.def(
      "verify",
      [](const std::string& level) {
        if (level != "fast" && level != "full") throw std::invalid_argument("level must be fast or full");
        std::ostringstream report;
        const bool ok = run_verify(level == "full" ? VerifyLevel::full : VerifyLevel::fast, report);
        return py::make_tuple(ok, report.str());
      },
      py::arg("level") = "fast", "Dense-oracle identity suite; returns (ok, report_text)");

  m.def(
      "export_instance",
      [](const py::dict& config, const std::string& prefix) {
        export_instance(build_inputs_from_config(config_from_dict(config)), InstancePaths::from_prefix(prefix));
      },
      py::arg("config"), py::arg("prefix"), "Write the algebraic instance (A_hat blocks, P, C, f) to files");

  m.def(
      "import_solve",
      [](const std::string& prefix, const std::string& method, const std::string& precond, double rtol,
         index_t maxit) {
        const ReductionInputs inputs = import_instance(InstancePaths::from_prefix(prefix));
        const SolveResult result =
            solve_reduction(inputs, method_from_string(method), precond_from_string(precond), rtol, maxit);
        py::dict d = record_to_dict(result.record);
        d["converged"] = result.converged;
        d["solution"] = result.solution;
        return d;
      },
      py::arg("prefix"), py::arg("method") = "hybridization", py::arg("precond") = "amg",
      py::arg("rtol") = 1e-12, py::arg("maxit") = 2000,
      "Import an instance from files and solve it through the same pipeline");

  m.def(
      "hybridized_matrix",
      [](const py::dict& config) {
        const ReductionInputs inputs = build_inputs_from_config(config_from_dict(config));
        const auto [op, g] = hybridize(inputs);
        return py::make_tuple(csr_to_tuple(op.h_mat), g);
      },
      py::arg("config"),
      "Multiplier Schur complement H as (nrows, ncols, row_offsets, col_indices, values) plus its rhs");

  m.attr("__version__") = "0.1.0";
}
