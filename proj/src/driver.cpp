#include "hdivred/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "hdivred/amg.hpp"
#include "hdivred/block_io.hpp"
#include "hdivred/errors.hpp"
#include "hdivred/matrix_market.hpp"

namespace hdivred {

namespace {

using nlohmann::json;

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::unique_ptr<Preconditioner> make_preconditioner(PrecondKind kind, const CsrMatrix& a) {
  switch (kind) {
    case PrecondKind::amg:
      return amg_preconditioner(a);
    case PrecondKind::jacobi:
      return jacobi_setup(a);
    case PrecondKind::sgs:
      return ssgs_setup(a);
    case PrecondKind::none:
      return nullptr;
  }
  return nullptr;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::assembled: return "assembled";
    case Method::hybridization: return "hybridization";
    case Method::condensation: return "condensation";
  }
  return "?";
}

std::string to_string(PrecondKind p) {
  switch (p) {
    case PrecondKind::amg: return "amg";
    case PrecondKind::jacobi: return "jacobi";
    case PrecondKind::sgs: return "sgs";
    case PrecondKind::none: return "none";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "assembled") return Method::assembled;
  if (s == "hybridization") return Method::hybridization;
  if (s == "condensation") return Method::condensation;
  throw std::invalid_argument("unknown method '" + s + "'");
}

PrecondKind precond_from_string(const std::string& s) {
  if (s == "amg") return PrecondKind::amg;
  if (s == "jacobi") return PrecondKind::jacobi;
  if (s == "sgs") return PrecondKind::sgs;
  if (s == "none") return PrecondKind::none;
  throw std::invalid_argument("unknown preconditioner '" + s + "'");
}

RunConfig config_from_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open config '" + path + "'", 0);
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("config parse error: ") + e.what(), 0);
  }

  RunConfig c;
  auto get_axis_array = [&](const char* key, auto& target) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (v.is_array()) {
      for (std::size_t a = 0; a < v.size() && a < 3; ++a) target[a] = v[a];
    } else {
      target[0] = target[1] = target[2] = v;
    }
  };
  if (j.contains("dim")) c.dim = j.at("dim");
  get_axis_array("cells", c.cells);
  get_axis_array("sizes", c.sizes);
  get_axis_array("origin", c.origin);
  get_axis_array("g", c.g);
  if (j.contains("order")) c.order = j.at("order");
  if (j.contains("coeff_preset")) c.coeff_preset = j.at("coeff_preset");
  if (j.contains("p")) c.p = j.at("p");
  if (j.contains("alpha")) c.alpha = j.at("alpha");
  if (j.contains("beta")) c.beta = j.at("beta");
  if (j.contains("coeff_file")) c.coeff_file = j.at("coeff_file");
  if (j.contains("method")) c.method = method_from_string(j.at("method"));
  if (j.contains("weighted")) c.weighted = j.at("weighted");
  if (j.contains("preconditioner")) c.preconditioner = precond_from_string(j.at("preconditioner"));
  if (j.contains("rtol")) c.rtol = j.at("rtol");
  if (j.contains("maxit")) c.maxit = j.at("maxit");
  if (j.contains("essential_boundary")) c.essential_boundary = j.at("essential_boundary");
  if (j.contains("output")) c.output = j.at("output");
  if (!(c.rtol > 0.0 && c.rtol < 1.0)) throw std::invalid_argument("rtol must be in (0, 1)");
  return c;
}

std::string config_to_json(const RunConfig& c) {
  json j;
  j["dim"] = c.dim;
  j["cells"] = {c.cells[0], c.cells[1], c.cells[2]};
  j["sizes"] = {c.sizes[0], c.sizes[1], c.sizes[2]};
  j["origin"] = {c.origin[0], c.origin[1], c.origin[2]};
  j["order"] = c.order;
  j["coeff_preset"] = c.coeff_preset;
  j["p"] = c.p;
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["coeff_file"] = c.coeff_file;
  j["method"] = to_string(c.method);
  j["weighted"] = c.weighted;
  j["preconditioner"] = to_string(c.preconditioner);
  j["rtol"] = c.rtol;
  j["maxit"] = c.maxit;
  j["essential_boundary"] = c.essential_boundary;
  j["g"] = {c.g[0], c.g[1], c.g[2]};
  j["output"] = c.output;
  return j.dump(2);
}

namespace {

struct BuiltProblem {
  RtSpace space;
  CellCoefficients coeffs;
  ReductionInputs inputs;
  EliminationResult elimination;  // valid only when eliminated
  bool eliminated = false;
  index_t full_n = 0;
};

BuiltProblem build_problem(const RunConfig& config) {
  BuiltProblem pb;
  std::array<double, 3> sizes = config.sizes;
  for (int a = 0; a < config.dim; ++a) {
    if (sizes[static_cast<std::size_t>(a)] == 0.0)
      sizes[static_cast<std::size_t>(a)] = 1.0 / static_cast<double>(config.cells[static_cast<std::size_t>(a)]);
  }
  const CartesianMesh mesh = build_mesh(config.dim, config.cells, sizes, config.origin);
  pb.space = build_space(mesh, config.order);

  if (config.coeff_preset == "soft-hard")
    pb.coeffs = soft_hard_coefficients(mesh, config.p);
  else if (!config.coeff_preset.empty())
    throw std::invalid_argument("unknown coefficient preset '" + config.coeff_preset + "'");
  else if (!config.coeff_file.empty())
    pb.coeffs = read_coefficient_file(mesh, config.coeff_file);
  else
    pb.coeffs = uniform_coefficients(mesh, config.alpha, config.beta);

  pb.inputs = build_reduction_inputs(pb.space, pb.coeffs, config.weighted, config.g);
  pb.full_n = pb.space.ndofs;

  if (config.essential_boundary) {
    std::vector<EssentialBc> bcs;
    for (index_t f = 0; f < mesh.nfaces(); ++f)
      if (mesh.face(f).is_boundary) bcs.push_back({f, 0.0});
    pb.elimination = eliminate_essential(pb.space, pb.inputs, bcs);
    pb.inputs = pb.elimination.inputs;
    pb.eliminated = true;
  }
  return pb;
}

}  // namespace

ReductionInputs build_inputs_from_config(const RunConfig& config) { return build_problem(config).inputs; }

SolveResult solve_reduction(const ReductionInputs& inputs, Method method, PrecondKind precond, double rtol,
                            index_t maxit, int order, int p) {
  if (!(rtol > 0.0 && rtol < 1.0)) throw std::invalid_argument("rtol must be in (0, 1)");
  SolveResult result;
  result.record.method = to_string(method);
  result.record.order = order;
  result.record.p = p;
  result.record.ndofs = inputs.n_global();

  const double t_start = now_seconds();
  std::vector<double> x;
  PcgReport report;

  auto run_pcg = [&](const CsrMatrix& reduced, const std::vector<double>& rhs) -> std::vector<double> {
    result.record.reduced_size = reduced.nrows;
    if (reduced.nrows == 0) {
      report.converged = true;
      result.record.setup_time = now_seconds() - t_start;
      return {};
    }
    const std::unique_ptr<Preconditioner> pc = make_preconditioner(precond, reduced);
    result.record.setup_time = now_seconds() - t_start;
    const double t_solve = now_seconds();
    auto [sol, rep] = pcg(reduced, pc.get(), rhs, rtol, maxit);
    result.record.solve_time = now_seconds() - t_solve;
    report = std::move(rep);
    return sol;
  };

  double t_recover = 0.0;
  switch (method) {
    case Method::assembled: {
      const auto [a_mat, f] = assemble(inputs);
      const std::vector<double> sol = run_pcg(a_mat, f);
      t_recover = now_seconds();
      x = sol;
      break;
    }
    case Method::hybridization: {
      const auto [hyb, g] = hybridize(inputs);
      const std::vector<double> lambda = run_pcg(hyb.h_mat, g);
      t_recover = now_seconds();
      x = recover_hybrid(hyb, lambda, inputs.f_hat).second;
      break;
    }
    case Method::condensation: {
      const auto [cond, f_s] = static_condense(inputs);
      const std::vector<double> x_b = run_pcg(cond.s_mat, f_s);
      t_recover = now_seconds();
      x = recover_condensed(cond, x_b, inputs.f_hat);
      break;
    }
  }
  result.record.recover_time = now_seconds() - t_recover;
  result.record.total_time = now_seconds() - t_start;
  result.record.iterations = report.iterations;
  result.record.final_relative_residual =
      report.relative_residuals.empty() ? 0.0 : report.relative_residuals.back();
  result.converged = report.converged;
  result.solution = std::move(x);
  result.record.solution_checksum = norm2(result.solution);
  return result;
}

SolveResult run_solve(const RunConfig& config) {
  const BuiltProblem pb = build_problem(config);
  SolveResult result =
      solve_reduction(pb.inputs, config.method, config.preconditioner, config.rtol, config.maxit, config.order,
                      config.coeff_preset == "soft-hard" ? config.p : 0);
  if (pb.eliminated) {
    const double t = now_seconds();
    result.solution = expand_eliminated(pb.elimination, result.solution, pb.full_n);
    result.record.recover_time += now_seconds() - t;
    result.record.total_time += now_seconds() - t;
    result.record.ndofs = pb.full_n;
    result.record.solution_checksum = norm2(result.solution);
  }
  if (!config.output.empty()) write_vector_lines(config.output, result.solution);
  return result;
}

std::vector<BenchRecord> run_bench(const std::vector<index_t>& cube_meshes, const std::vector<int>& p_values,
                                   const std::vector<Method>& methods, int order, bool weighted,
                                   PrecondKind precond, double rtol, index_t maxit) {
  std::vector<Method> sorted_methods = methods;
  std::sort(sorted_methods.begin(), sorted_methods.end(),
            [](Method a, Method b) { return to_string(a) < to_string(b); });
  std::vector<index_t> sorted_meshes = cube_meshes;
  std::sort(sorted_meshes.begin(), sorted_meshes.end());
  std::vector<int> sorted_p = p_values;
  std::sort(sorted_p.begin(), sorted_p.end());

  std::vector<BenchRecord> records;
  for (Method method : sorted_methods) {
    for (index_t n : sorted_meshes) {
      for (int p : sorted_p) {
        RunConfig config;
        config.dim = 3;
        config.cells = {n, n, n};
        config.order = order;
        config.coeff_preset = "soft-hard";
        config.p = p;
        config.method = method;
        config.weighted = weighted;
        config.preconditioner = precond;
        config.rtol = rtol;
        config.maxit = maxit;
        try {
          records.push_back(run_solve(config).record);
        } catch (const std::exception& e) {
          BenchRecord failed;
          failed.method = to_string(method);
          failed.order = order;
          failed.p = p;
          failed.ndofs = 0;
          failed.reduced_size = 0;
          failed.iterations = -1;
          failed.final_relative_residual = -1.0;
          records.push_back(failed);
        }
      }
    }
  }
  return records;
}

void write_bench_csv(std::ostream& os, const std::vector<BenchRecord>& records) {
  os << "method,order,p,ndofs,reduced_size,setup_time,solve_time,recover_time,total_time,iterations,"
        "final_relative_residual,solution_checksum\n";
  for (const BenchRecord& r : records) {
    os << r.method << "," << r.order << "," << r.p << "," << r.ndofs << "," << r.reduced_size << ","
       << format_number(r.setup_time) << "," << format_number(r.solve_time) << ","
       << format_number(r.recover_time) << "," << format_number(r.total_time) << "," << r.iterations << ","
       << format_number(r.final_relative_residual) << "," << format_number(r.solution_checksum) << "\n";
  }
}

void write_bench_json(std::ostream& os, const std::vector<BenchRecord>& records) {
  json arr = json::array();
  for (const BenchRecord& r : records) {
    json j;
    j["method"] = r.method;
    j["order"] = r.order;
    j["p"] = r.p;
    j["ndofs"] = r.ndofs;
    j["reduced_size"] = r.reduced_size;
    j["setup_time"] = r.setup_time;
    j["solve_time"] = r.solve_time;
    j["recover_time"] = r.recover_time;
    j["total_time"] = r.total_time;
    j["iterations"] = r.iterations;
    j["final_relative_residual"] = r.final_relative_residual;
    j["solution_checksum"] = r.solution_checksum;
    arr.push_back(j);
  }
  os << arr.dump(2) << "\n";
}

InstancePaths InstancePaths::from_prefix(const std::string& prefix) {
  return {prefix + ".blocks.txt", prefix + ".P.mtx", prefix + ".C.mtx", prefix + ".f.mtx"};
}

void export_instance(const ReductionInputs& inputs, const InstancePaths& paths) {
  write_block_operator(paths.blocks, inputs.a_hat);
  write_matrix_market(paths.p, inputs.p_mat);
  write_matrix_market(paths.c, inputs.c_mat);
  write_vector_market(paths.f, inputs.f_hat);
}

ReductionInputs import_instance(const InstancePaths& paths) {
  ReductionInputs inputs;
  inputs.a_hat = read_block_operator(paths.blocks);
  inputs.p_mat = read_matrix_market(paths.p);
  inputs.c_mat = read_matrix_market(paths.c);
  inputs.f_hat = read_vector_market(paths.f);
  inputs.interior_global_begin = -1;  // unknown on the algebraic import path
  validate_reduction_inputs(inputs);
  return inputs;
}

}  // namespace hdivred
