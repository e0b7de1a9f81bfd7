#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hdivred/driver.hpp"
#include "hdivred/errors.hpp"
#include "hdivred/matrix_market.hpp"
#include "hdivred/verify.hpp"
#include "test_support.hpp"

using namespace hdivred;

namespace {

RunConfig small_config(Method method) {
  RunConfig c;
  c.cells = {2, 2, 2};
  c.order = 0;
  c.method = method;
  c.preconditioner = PrecondKind::jacobi;
  c.rtol = 1e-12;
  c.maxit = 500;
  return c;
}

}  // namespace

TEST_CASE("cross-method agreement on a 2^3 mesh") {
  const SolveResult assembled = run_solve(small_config(Method::assembled));
  const SolveResult hybrid = run_solve(small_config(Method::hybridization));
  const SolveResult condensed = run_solve(small_config(Method::condensation));
  REQUIRE(assembled.converged);
  REQUIRE(hybrid.converged);
  REQUIRE(condensed.converged);
  CHECK(std::abs(assembled.record.solution_checksum - hybrid.record.solution_checksum) <=
        1e-8 * assembled.record.solution_checksum);
  CHECK(oracle::rel_inf_diff(assembled.solution, hybrid.solution) <= 1e-8);
  CHECK(oracle::rel_inf_diff(assembled.solution, condensed.solution) <= 1e-8);
  // condensation at k=0 keeps every dof
  CHECK(condensed.record.reduced_size == condensed.record.ndofs);
}

TEST_CASE("single-cell mesh solves by every method") {
  for (Method m : {Method::assembled, Method::hybridization, Method::condensation}) {
    RunConfig c = small_config(m);
    c.cells = {1, 1, 1};
    c.preconditioner = PrecondKind::none;
    const SolveResult r = run_solve(c);
    CHECK(r.converged);
    CHECK(r.record.ndofs == 6);
    CHECK(r.record.solution_checksum > 0.0);
  }
}

TEST_CASE("determinism: identical configs give identical outputs") {
  RunConfig c = small_config(Method::hybridization);
  c.coeff_preset = "soft-hard";
  c.p = 4;
  const SolveResult r1 = run_solve(c);
  const SolveResult r2 = run_solve(c);
  CHECK(r1.solution == r2.solution);
  CHECK(r1.record.iterations == r2.record.iterations);
  CHECK(r1.record.solution_checksum == r2.record.solution_checksum);
}

TEST_CASE("bench tables are byte-identical apart from the timing fields") {
  auto run_once = [] {
    return run_bench({2}, {-4, 0, 4}, {Method::hybridization}, 0, false, PrecondKind::jacobi, 1e-11, 500);
  };
  auto strip_times = [](std::vector<BenchRecord> records) {
    for (auto& r : records) r.setup_time = r.solve_time = r.recover_time = r.total_time = 0.0;
    std::ostringstream os;
    write_bench_csv(os, records);
    return os.str();
  };
  CHECK(strip_times(run_once()) == strip_times(run_once()));
}

TEST_CASE("essential boundary elimination end to end") {
  RunConfig c = small_config(Method::hybridization);
  c.essential_boundary = true;
  const SolveResult r = run_solve(c);
  CHECK(r.converged);
  REQUIRE(r.solution.size() == 36);
  // all boundary face dofs are pinned to zero
  const CartesianMesh mesh = build_mesh(3, {2, 2, 2}, {0.5, 0.5, 0.5});
  for (index_t f = 0; f < mesh.nfaces(); ++f)
    if (mesh.face(f).is_boundary) CHECK(r.solution[static_cast<std::size_t>(f)] == 0.0);

  RunConfig c2 = c;
  c2.method = Method::assembled;
  const SolveResult r2 = run_solve(c2);
  CHECK(oracle::rel_inf_diff(r.solution, r2.solution) <= 1e-8);

  // all three methods agree with interior dofs in play as well
  RunConfig k1 = c;
  k1.order = 1;
  k1.method = Method::assembled;
  const SolveResult k1_asm = run_solve(k1);
  k1.method = Method::hybridization;
  const SolveResult k1_hyb = run_solve(k1);
  k1.method = Method::condensation;
  const SolveResult k1_con = run_solve(k1);
  REQUIRE(k1_asm.converged);
  CHECK(oracle::rel_inf_diff(k1_asm.solution, k1_hyb.solution) <= 1e-8);
  CHECK(oracle::rel_inf_diff(k1_asm.solution, k1_con.solution) <= 1e-8);
}

TEST_CASE("bench sweep shape and ordering") {
  const auto records = run_bench({2, 3}, {0, -4, 4}, {Method::hybridization, Method::assembled}, 0, false,
                                 PrecondKind::jacobi, 1e-10, 2000);
  REQUIRE(records.size() == 12);
  // sorted by (method, mesh, p)
  CHECK(records[0].method == "assembled");
  CHECK(records[6].method == "hybridization");
  for (std::size_t i = 0; i < 6; i += 3) {
    CHECK(records[i].p == -4);
    CHECK(records[i + 1].p == 0);
    CHECK(records[i + 2].p == 4);
  }
  CHECK(records[0].ndofs < records[3].ndofs);
  for (const auto& r : records) CHECK(r.iterations >= 0);

  std::ostringstream csv;
  write_bench_csv(csv, records);
  std::istringstream lines(csv.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header ==
        "method,order,p,ndofs,reduced_size,setup_time,solve_time,recover_time,total_time,iterations,"
        "final_relative_residual,solution_checksum");
  int count = 0;
  std::string line;
  while (std::getline(lines, line))
    if (!line.empty()) ++count;
  CHECK(count == 12);
}

TEST_CASE("empty p list yields only the header") {
  const auto records = run_bench({2}, {}, {Method::hybridization}, 0, false, PrecondKind::jacobi, 1e-10, 100);
  CHECK(records.empty());
  std::ostringstream csv;
  write_bench_csv(csv, records);
  CHECK(csv.str().find("method,order,p") == 0);
}

TEST_CASE("config json round trip") {
  RunConfig c = small_config(Method::condensation);
  c.coeff_preset = "soft-hard";
  c.p = -8;
  c.weighted = true;
  c.rtol = 1e-9;
  const std::string path = "config_test.json";
  {
    std::ofstream os(path);
    os << config_to_json(c);
  }
  const RunConfig back = config_from_json_file(path);
  CHECK(back.cells == c.cells);
  CHECK(back.method == c.method);
  CHECK(back.coeff_preset == c.coeff_preset);
  CHECK(back.p == c.p);
  CHECK(back.weighted == c.weighted);
  CHECK(back.rtol == c.rtol);
  std::remove(path.c_str());

  std::ofstream bad("config_bad.json");
  bad << "{ not json";
  bad.close();
  CHECK_THROWS_AS(config_from_json_file("config_bad.json"), FormatError);
  std::remove("config_bad.json");
}

TEST_CASE("export, import, and the identical pipeline") {
  RunConfig c = small_config(Method::hybridization);
  const ReductionInputs inputs = build_inputs_from_config(c);
  const InstancePaths paths = InstancePaths::from_prefix("io_test_instance");
  export_instance(inputs, paths);

  SUBCASE("round trip is bit exact and H is unchanged") {
    const ReductionInputs back = import_instance(paths);
    CHECK(back.f_hat == inputs.f_hat);
    CHECK(same_pattern_and_values(back.p_mat, inputs.p_mat));
    CHECK(same_pattern_and_values(back.c_mat, inputs.c_mat));
    const auto [h1, g1] = hybridize(inputs);
    const auto [h2, g2] = hybridize(back);
    CHECK(same_pattern_and_values(h1.h_mat, h2.h_mat));
    CHECK(g1 == g2);
  }
  SUBCASE("imported instance solves like the in-memory one") {
    const ReductionInputs back = import_instance(paths);
    const SolveResult direct = run_solve(c);
    const SolveResult imported =
        solve_reduction(back, Method::hybridization, PrecondKind::jacobi, 1e-12, 500);
    CHECK(oracle::rel_inf_diff(direct.solution, imported.solution) <= 1e-9);
  }
  SUBCASE("inconsistent C is rejected with the offending entry named") {
    ReductionInputs bad = inputs;
    bad.c_mat.values[0] = 2.0;  // CP != 0 now
    const InstancePaths bad_paths = InstancePaths::from_prefix("io_test_bad");
    export_instance(bad, bad_paths);
    CHECK_THROWS_WITH_AS(static_cast<void>(import_instance(bad_paths)),
                         doctest::Contains("C*P != 0"), ValidationError);
    for (const auto& p : {bad_paths.blocks, bad_paths.p, bad_paths.c, bad_paths.f}) std::remove(p.c_str());
  }
  SUBCASE("malformed block file header") {
    std::ofstream os(paths.blocks, std::ios::trunc);
    os << "%%WrongHeader\n";
    os.close();
    CHECK_THROWS_AS(static_cast<void>(import_instance(paths)), FormatError);
  }

  for (const auto& p : {paths.blocks, paths.p, paths.c, paths.f}) std::remove(p.c_str());
}

TEST_CASE("verify fault injection: a perturbed H fails the interface identity") {
  const CartesianMesh mesh = build_mesh(3, {2, 2, 2}, {0.5, 0.5, 0.5});
  const RtSpace sp = build_space(mesh, 0);
  const ReductionInputs in = build_reduction_inputs(sp, uniform_coefficients(mesh, 1.0, 1.0));
  auto [op, g] = hybridize(in);

  const VerifyCheck good = check_interface_schur_identity(in, op.h_mat);
  CHECK(good.pass);

  CsrMatrix h_bad = op.h_mat;
  h_bad.values[0] += 1e-3;
  const VerifyCheck bad = check_interface_schur_identity(in, h_bad);
  CHECK_FALSE(bad.pass);
}

TEST_CASE("desk bench preset: 8^3 and 16^3, five exponents, hybridization + AMG") {
  const auto records =
      run_bench({8, 16}, {-8, -4, 0, 4, 8}, {Method::hybridization}, 0, false, PrecondKind::amg, 1e-12, 2000);
  REQUIRE(records.size() == 10);
  for (const auto& r : records) {
    CHECK(r.iterations > 0);
    CHECK(r.final_relative_residual <= 1e-12);
    CHECK(r.reduced_size < r.ndofs);  // multipliers live on interior faces only
  }
}

TEST_CASE("thread count does not change results") {
  RunConfig c = small_config(Method::hybridization);
  c.cells = {3, 3, 3};
  c.coeff_preset = "soft-hard";
  c.p = 4;
  const SolveResult serial = run_solve(c);
  setenv("HDIVRED_NUM_THREADS", "4", 1);
  const SolveResult threaded = run_solve(c);
  unsetenv("HDIVRED_NUM_THREADS");
  CHECK(serial.solution == threaded.solution);
  CHECK(serial.record.iterations == threaded.record.iterations);
}

TEST_CASE("2d quadrilateral meshes solve end to end") {
  for (int order : {0, 1}) {
    RunConfig base;
    base.dim = 2;
    base.cells = {4, 4, 1};
    base.order = order;
    base.preconditioner = PrecondKind::sgs;
    base.rtol = 1e-12;
    base.maxit = 500;
    base.method = Method::assembled;
    const SolveResult asm_result = run_solve(base);
    base.method = Method::hybridization;
    const SolveResult hyb_result = run_solve(base);
    base.method = Method::condensation;
    const SolveResult con_result = run_solve(base);
    REQUIRE(asm_result.converged);
    REQUIRE(hyb_result.converged);
    REQUIRE(con_result.converged);
    CHECK(oracle::rel_inf_diff(asm_result.solution, hyb_result.solution) <= 1e-8);
    CHECK(oracle::rel_inf_diff(asm_result.solution, con_result.solution) <= 1e-8);
  }
}

TEST_CASE("weighted and unweighted hybridization reach the same solution") {
  RunConfig c = small_config(Method::hybridization);
  c.coeff_preset = "soft-hard";
  c.p = 4;
  const SolveResult plain = run_solve(c);
  c.weighted = true;
  const SolveResult weighted = run_solve(c);
  REQUIRE(plain.converged);
  REQUIRE(weighted.converged);
  CHECK(oracle::rel_inf_diff(plain.solution, weighted.solution) <= 1e-8);
}
