#ifndef HDIVRED_DRIVER_HPP
#define HDIVRED_DRIVER_HPP

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "hdivred/reduction.hpp"
#include "hdivred/solvers.hpp"

namespace hdivred {

enum class Method { assembled, hybridization, condensation };
enum class PrecondKind { amg, jacobi, sgs, none };

std::string to_string(Method m);
std::string to_string(PrecondKind p);
Method method_from_string(const std::string& s);
PrecondKind precond_from_string(const std::string& s);

/// End-to-end run configuration. Loadable from a JSON file whose keys mirror
/// the CLI flag names.
struct RunConfig {
  int dim = 3;
  std::array<index_t, 3> cells{8, 8, 8};
  std::array<double, 3> sizes{0.0, 0.0, 0.0};  // 0 means 1/cells (unit cube)
  std::array<double, 3> origin{0.0, 0.0, 0.0};
  int order = 0;

  std::string coeff_preset;  // "soft-hard" or empty for uniform/file
  int p = 0;
  double alpha = 1.0;
  double beta = 1.0;
  std::string coeff_file;

  Method method = Method::hybridization;
  bool weighted = false;
  PrecondKind preconditioner = PrecondKind::amg;
  double rtol = 1e-12;
  index_t maxit = 2000;
  bool essential_boundary = false;
  std::array<double, 3> g{1.0, 1.0, 1.0};
  std::string output;  // solution file path, empty = do not write
};

RunConfig config_from_json_file(const std::string& path);
std::string config_to_json(const RunConfig& config);

struct BenchRecord {
  std::string method;
  int order = 0;
  int p = 0;
  index_t ndofs = 0;
  index_t reduced_size = 0;
  double setup_time = 0.0;
  double solve_time = 0.0;
  double recover_time = 0.0;
  double total_time = 0.0;
  index_t iterations = 0;
  double final_relative_residual = 0.0;
  double solution_checksum = 0.0;  // l2 norm of the recovered solution
};

struct SolveResult {
  BenchRecord record;
  std::vector<double> solution;  // full conforming dof vector
  bool converged = false;
};

/// Builds the mesh/space/coefficients, runs the chosen reduction and PCG,
/// recovers the solution, and optionally writes it to config.output.
SolveResult run_solve(const RunConfig& config);

/// The reduction/solve pipeline on prebuilt algebraic inputs (the imported-
/// file path). interior_global_begin of the inputs steers condensation.
SolveResult solve_reduction(const ReductionInputs& inputs, Method method, PrecondKind precond, double rtol,
                            index_t maxit, int order = -1, int p = 0);

/// The 6.1-style sweep: one record per (mesh, p, method), sorted by
/// (method, mesh, p). Failures are recorded (iterations = -1) and the sweep
/// continues.
std::vector<BenchRecord> run_bench(const std::vector<index_t>& cube_meshes, const std::vector<int>& p_values,
                                   const std::vector<Method>& methods, int order, bool weighted,
                                   PrecondKind precond, double rtol, index_t maxit);

void write_bench_csv(std::ostream& os, const std::vector<BenchRecord>& records);
void write_bench_json(std::ostream& os, const std::vector<BenchRecord>& records);

/// File layout of one exported instance: <prefix>.blocks.txt, <prefix>.P.mtx,
/// <prefix>.C.mtx, <prefix>.f.mtx.
struct InstancePaths {
  std::string blocks, p, c, f;
  static InstancePaths from_prefix(const std::string& prefix);
};

void export_instance(const ReductionInputs& inputs, const InstancePaths& paths);
/// Reads and validates (throws ValidationError when C P != 0).
ReductionInputs import_instance(const InstancePaths& paths);

ReductionInputs build_inputs_from_config(const RunConfig& config);

}  // namespace hdivred

#endif
