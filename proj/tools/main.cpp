#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hdivred/driver.hpp"
#include "hdivred/errors.hpp"
#include "hdivred/matrix_market.hpp"
#include "hdivred/verify.hpp"

namespace {

using namespace hdivred;

constexpr int kExitOk = 0;
constexpr int kExitSolverFailure = 1;
constexpr int kExitInputError = 2;

struct ConfigFlags {
  std::string config_file;
  std::vector<index_t> cells;
  std::vector<double> sizes;
  int dim = -1;
  int order = -1;
  std::string preset;
  int p = 0;
  bool p_set = false;
  double alpha = -1.0, beta = -1.0;
  std::string coeff_file;
  std::string method;
  bool weighted = false;
  std::string precond;
  double rtol = -1.0;
  long long maxit = -1;
  bool essential_boundary = false;
  std::string output;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--config", f.config_file, "JSON config file; flags override its keys");
  cmd->add_option("--dim", f.dim, "mesh dimension (2 or 3)");
  cmd->add_option("--cells", f.cells, "cells per axis (1 value = cube)")->expected(1, 3);
  cmd->add_option("--sizes", f.sizes, "cell sizes per axis (default: unit cube)")->expected(1, 3);
  cmd->add_option("--order", f.order, "Raviart-Thomas order k (0 or 1)");
  cmd->add_option("--preset", f.preset, "coefficient preset: soft-hard");
  cmd->add_option("--p", f.p, "soft-hard exponent")->each([&](const std::string&) { f.p_set = true; });
  cmd->add_option("--alpha", f.alpha, "uniform alpha coefficient");
  cmd->add_option("--beta", f.beta, "uniform beta coefficient");
  cmd->add_option("--coeff-file", f.coeff_file, "per-cell coefficient file");
  cmd->add_option("--method", f.method, "assembled | hybridization | condensation");
  cmd->add_flag("--weighted", f.weighted, "mass-weighted constraint rows");
  cmd->add_option("--precond", f.precond, "amg | jacobi | sgs | none");
  cmd->add_option("--rtol", f.rtol, "PCG relative tolerance");
  cmd->add_option("--maxit", f.maxit, "PCG iteration cap");
  cmd->add_flag("--essential-boundary", f.essential_boundary, "eliminate all boundary face dofs (zero flux)");
  cmd->add_option("--output", f.output, "solution output path");
}

RunConfig merge_config(const ConfigFlags& f) {
  RunConfig c;
  if (!f.config_file.empty()) c = config_from_json_file(f.config_file);
  if (f.dim > 0) c.dim = f.dim;
  if (!f.cells.empty()) {
    if (f.cells.size() == 1)
      c.cells = {f.cells[0], f.cells[0], f.cells[0]};
    else
      for (std::size_t a = 0; a < f.cells.size(); ++a) c.cells[a] = f.cells[a];
  }
  if (!f.sizes.empty()) {
    if (f.sizes.size() == 1)
      c.sizes = {f.sizes[0], f.sizes[0], f.sizes[0]};
    else
      for (std::size_t a = 0; a < f.sizes.size(); ++a) c.sizes[a] = f.sizes[a];
  }
  if (f.order >= 0) c.order = f.order;
  if (!f.preset.empty()) c.coeff_preset = f.preset;
  if (f.p_set) c.p = f.p;
  if (f.alpha > 0.0) c.alpha = f.alpha;
  if (f.beta > 0.0) c.beta = f.beta;
  if (!f.coeff_file.empty()) c.coeff_file = f.coeff_file;
  if (!f.method.empty()) c.method = method_from_string(f.method);
  if (f.weighted) c.weighted = true;
  if (!f.precond.empty()) c.preconditioner = precond_from_string(f.precond);
  if (f.rtol > 0.0) c.rtol = f.rtol;
  if (f.maxit > 0) c.maxit = f.maxit;
  if (f.essential_boundary) c.essential_boundary = true;
  if (!f.output.empty()) c.output = f.output;
  return c;
}

void print_record(const BenchRecord& r, std::ostream& os) {
  std::vector<BenchRecord> one{r};
  write_bench_csv(os, one);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"H(div) solver toolkit: algebraic hybridization and static condensation"};
  app.require_subcommand(1);

  // solve
  ConfigFlags solve_flags;
  CLI::App* solve_cmd = app.add_subcommand("solve", "end-to-end solve of one configuration");
  add_config_flags(solve_cmd, solve_flags);

  // bench
  ConfigFlags bench_flags;
  std::vector<index_t> bench_meshes{8, 16};
  std::vector<int> bench_p{-8, -4, 0, 4, 8};
  std::vector<std::string> bench_methods{"hybridization"};
  std::string bench_out;
  bool bench_json = false;
  CLI::App* bench_cmd = app.add_subcommand("bench", "soft-hard coefficient-jump sweep");
  add_config_flags(bench_cmd, bench_flags);
  bench_cmd->add_option("--meshes", bench_meshes, "cube mesh sizes to sweep");
  bench_cmd->add_option("--p-list", bench_p, "soft-hard exponents to sweep");
  bench_cmd->add_option("--methods", bench_methods, "methods to sweep");
  bench_cmd->add_option("--out", bench_out, "output table path (default stdout)");
  bench_cmd->add_flag("--json", bench_json, "emit JSON instead of CSV");

  // verify
  std::string verify_level = "fast";
  CLI::App* verify_cmd = app.add_subcommand("verify", "dense-oracle identity suite");
  verify_cmd->add_option("--level", verify_level, "fast | full");

  // export
  ConfigFlags export_flags;
  std::string export_prefix = "instance";
  std::string export_a, export_h, export_s;
  CLI::App* export_cmd = app.add_subcommand("export", "write the algebraic instance (A_hat, P, C, f) to files");
  add_config_flags(export_cmd, export_flags);
  export_cmd->add_option("--prefix", export_prefix, "output file prefix");
  export_cmd->add_option("--export-a", export_a, "also write assembled A (Matrix Market)");
  export_cmd->add_option("--export-h", export_h, "also write hybridized H (Matrix Market)");
  export_cmd->add_option("--export-s", export_s, "also write condensed S (Matrix Market)");

  // import
  std::string import_prefix;
  std::string import_method = "hybridization";
  std::string import_precond = "amg";
  double import_rtol = 1e-12;
  long long import_maxit = 2000;
  std::string import_output;
  std::string import_export_h;
  CLI::App* import_cmd = app.add_subcommand("import", "read an instance and solve through the same pipeline");
  import_cmd->add_option("--prefix", import_prefix, "input file prefix")->required();
  import_cmd->add_option("--method", import_method, "assembled | hybridization | condensation");
  import_cmd->add_option("--precond", import_precond, "amg | jacobi | sgs | none");
  import_cmd->add_option("--rtol", import_rtol, "PCG relative tolerance");
  import_cmd->add_option("--maxit", import_maxit, "PCG iteration cap");
  import_cmd->add_option("--output", import_output, "solution output path");
  import_cmd->add_option("--export-h", import_export_h, "write hybridized H (Matrix Market)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_cmd->parsed()) {
      const RunConfig config = merge_config(solve_flags);
      const SolveResult result = run_solve(config);
      print_record(result.record, std::cout);
      if (!result.converged) {
        std::cerr << "solver did not converge within " << config.maxit << " iterations\n";
        return kExitSolverFailure;
      }
      return kExitOk;
    }

    if (bench_cmd->parsed()) {
      const RunConfig base = merge_config(bench_flags);
      std::vector<Method> methods;
      for (const std::string& s : bench_methods) methods.push_back(method_from_string(s));
      const std::vector<BenchRecord> records =
          run_bench(bench_meshes, bench_p, methods, base.order, base.weighted, base.preconditioner, base.rtol,
                    base.maxit);
      if (bench_out.empty()) {
        if (bench_json)
          write_bench_json(std::cout, records);
        else
          write_bench_csv(std::cout, records);
      } else {
        std::ofstream os(bench_out);
        if (!os) throw FormatError("cannot open '" + bench_out + "' for writing", 0);
        if (bench_json)
          write_bench_json(os, records);
        else
          write_bench_csv(os, records);
      }
      for (const BenchRecord& r : records)
        if (r.iterations < 0) return kExitSolverFailure;
      return kExitOk;
    }

    if (verify_cmd->parsed()) {
      if (verify_level != "fast" && verify_level != "full")
        throw std::invalid_argument("verify level must be fast or full");
      const bool ok = run_verify(verify_level == "full" ? VerifyLevel::full : VerifyLevel::fast, std::cout);
      return ok ? kExitOk : kExitSolverFailure;
    }

    if (export_cmd->parsed()) {
      const RunConfig config = merge_config(export_flags);
      const ReductionInputs inputs = build_inputs_from_config(config);
      export_instance(inputs, InstancePaths::from_prefix(export_prefix));
      if (!export_a.empty()) write_matrix_market(export_a, assemble(inputs).first);
      if (!export_h.empty()) write_matrix_market(export_h, hybridize(inputs).first.h_mat);
      if (!export_s.empty()) write_matrix_market(export_s, static_condense(inputs).first.s_mat);
      return kExitOk;
    }

    if (import_cmd->parsed()) {
      const ReductionInputs inputs = import_instance(InstancePaths::from_prefix(import_prefix));
      if (!import_export_h.empty()) write_matrix_market(import_export_h, hybridize(inputs).first.h_mat);
      const SolveResult result =
          solve_reduction(inputs, method_from_string(import_method), precond_from_string(import_precond),
                          import_rtol, import_maxit);
      if (!import_output.empty()) write_vector_lines(import_output, result.solution);
      print_record(result.record, std::cout);
      return result.converged ? kExitOk : kExitSolverFailure;
    }
  } catch (const FormatError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const ValidationError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolverFailure;
  }
  return kExitOk;
}
