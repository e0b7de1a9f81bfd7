#include <doctest.h>

#include <cmath>

#include "hdivred/reduction.hpp"
#include "hdivred/rt_space.hpp"
#include "test_support.hpp"

using namespace hdivred;

namespace {

CartesianMesh unit_cube_mesh(index_t n) {
  const double h = 1.0 / static_cast<double>(n);
  return build_mesh(3, {n, n, n}, {h, h, h});
}

// || a - (b^T w^-1 b + m) || / ||a|| in the max norm
double hdiv_decomposition_error(const ElementMatrices& em) {
  const DenseMatrix winv_b = dense_multiply(oracle::gauss_jordan_inverse(em.w_mat), em.b_mat);
  const DenseMatrix btwb = dense_multiply(dense_transpose(em.b_mat), winv_b);
  const DenseMatrix sum = dense_add(btwb, em.m_mat);
  return oracle::max_abs_diff(em.a_mat, sum) / dense_max_abs(em.a_mat);
}

}  // namespace

TEST_CASE("gauss legendre nodes integrate polynomials exactly") {
  std::vector<double> s, w;
  gauss_legendre_01(4, s, w);
  for (int deg = 0; deg <= 7; ++deg) {
    double q = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) q += w[i] * std::pow(s[i], deg);
    CHECK(std::abs(q - 1.0 / (deg + 1)) <= 1e-14);
  }
}

TEST_CASE("legendre evaluations") {
  CHECK(legendre01(0, 0.3) == 1.0);
  CHECK(std::abs(legendre01(1, 0.75) - 0.5) <= 1e-15);
  CHECK(std::abs(legendre01(2, 1.0) - 1.0) <= 1e-15);
  CHECK(std::abs(legendre01(2, 0.0) - 1.0) <= 1e-15);
  // orthogonality via quadrature
  std::vector<double> s, w;
  gauss_legendre_01(5, s, w);
  for (int a = 0; a <= 2; ++a)
    for (int b = 0; b <= 2; ++b) {
      double q = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) q += w[i] * legendre01(a, s[i]) * legendre01(b, s[i]);
      const double expect = (a == b) ? 1.0 / (2.0 * a + 1.0) : 0.0;
      CHECK(std::abs(q - expect) <= 1e-14);
    }
}

TEST_CASE("space dof counts") {
  SUBCASE("reference mesh pair reproduces 401,408 dofs") {
    const RtSpace rt0 = build_space(build_mesh(3, {64, 64, 32}, {1.0 / 64, 1.0 / 64, 1.0 / 32}), 0);
    CHECK(rt0.ndofs == 401408);
    const RtSpace rt1 = build_space(build_mesh(3, {32, 32, 16}, {1.0 / 32, 1.0 / 32, 1.0 / 16}), 1);
    CHECK(rt1.ndofs == 401408);
  }
  SUBCASE("single cell") {
    const RtSpace sp = build_space(build_mesh(3, {1, 1, 1}, {1, 1, 1}), 0);
    CHECK(sp.ndofs == 6);
    CHECK(sp.broken_ndofs == 6);
    CHECK(sp.interior_dofs_per_cell == 0);
    const RtSpace sp1 = build_space(build_mesh(3, {1, 1, 1}, {1, 1, 1}), 1);
    CHECK(sp1.ndofs == 6 * 4 + 12);
    CHECK(sp1.element_ndofs == 36);
  }
  SUBCASE("2d k=1") {
    const RtSpace sp = build_space(build_mesh(2, {2, 2, 1}, {0.5, 0.5, 1}), 1);
    CHECK(sp.dofs_per_face == 2);
    CHECK(sp.interior_dofs_per_cell == 4);
    CHECK(sp.ndofs == 12 * 2 + 4 * 4);
  }
  SUBCASE("unsupported order") { CHECK_THROWS_AS(build_space(unit_cube_mesh(1), 2), std::invalid_argument); }
}

TEST_CASE("RT0 element matrices on the unit cube") {
  const CartesianMesh mesh = build_mesh(3, {1, 1, 1}, {1, 1, 1});
  const RtSpace sp = build_space(mesh, 0);
  const CellCoefficients coeffs = uniform_coefficients(mesh, 1.0, 1.0);
  const ElementMatrices em = element_matrices(sp, 0, coeffs);

  SUBCASE("divergence row is all ones and the pressure mass is [1]") {
    REQUIRE(em.b_mat.nrows == 1);
    REQUIRE(em.b_mat.ncols == 6);
    for (index_t j = 0; j < 6; ++j) CHECK(std::abs(em.b_mat(0, j) - 1.0) <= 1e-13);
    REQUIRE(em.w_mat.nrows == 1);
    CHECK(std::abs(em.w_mat(0, 0) - 1.0) <= 1e-14);
  }
  SUBCASE("a = b^T w^-1 b + m and symmetry") {
    CHECK(hdiv_decomposition_error(em) <= 1e-12);
    CHECK(oracle::max_abs_diff(em.a_mat, dense_transpose(em.a_mat)) <= 1e-13 * dense_max_abs(em.a_mat));
  }
  SUBCASE("refined-quadrature oracle agrees") {
    const ElementMatrices fine = element_matrices_quadrature(sp, 0, coeffs, {1, 1, 1}, 8);
    CHECK(oracle::max_abs_diff(em.a_mat, fine.a_mat) <= 1e-12 * dense_max_abs(em.a_mat));
    CHECK(oracle::max_abs_diff(em.m_mat, fine.m_mat) <= 1e-12 * dense_max_abs(em.m_mat));
    CHECK(oracle::max_abs_diff(em.b_mat, fine.b_mat) <= 1e-12);
    CHECK(oracle::max_abs_diff(em.w_mat, fine.w_mat) <= 1e-12);
  }
  SUBCASE("beta scaling doubles the mass term only") {
    const CellCoefficients doubled = uniform_coefficients(mesh, 1.0, 2.0);
    const ElementMatrices em2 = element_matrices(sp, 0, doubled);
    for (std::size_t i = 0; i < em.m_mat.entries.size(); ++i)
      CHECK(em2.m_mat.entries[i] == 2.0 * em.m_mat.entries[i]);
    CHECK(em2.b_mat.entries == em.b_mat.entries);
    CHECK(em2.w_mat.entries == em.w_mat.entries);
  }
  SUBCASE("positive definite") {
    const auto ev = symmetric_eigenvalues(em.a_mat);
    CHECK(ev.front() > 0.0);
  }
}

TEST_CASE("hdiv decomposition identity over random coefficients, both orders") {
  const CartesianMesh mesh = build_mesh(3, {2, 2, 2}, {0.5, 0.5, 0.5});
  oracle::Xorshift rng(2024);
  for (int order = 0; order <= 1; ++order) {
    const RtSpace sp = build_space(mesh, order);
    for (int trial = 0; trial < 25; ++trial) {
      CellCoefficients coeffs = uniform_coefficients(mesh, 1.0, 1.0);
      const double alpha = rng.log_uniform(1e-8, 1e8);
      const double beta = rng.log_uniform(1e-8, 1e8);
      for (auto& a : coeffs.alpha) a = alpha;
      for (auto& b : coeffs.beta) b = beta;
      const ElementMatrices em = element_matrices(sp, 0, coeffs);
      CHECK(hdiv_decomposition_error(em) <= 1e-12);
    }
  }
}

TEST_CASE("k=1 element matrices against the refined-quadrature oracle") {
  const CartesianMesh mesh = build_mesh(3, {2, 2, 2}, {0.5, 0.5, 0.5});
  const RtSpace sp = build_space(mesh, 1);
  const CellCoefficients coeffs = uniform_coefficients(mesh, 2.0, 0.5);
  const ElementMatrices em = element_matrices(sp, 3, coeffs, {1.0, -2.0, 0.25});
  const ElementMatrices fine = element_matrices_quadrature(sp, 3, coeffs, {1.0, -2.0, 0.25}, 8);
  CHECK(oracle::max_abs_diff(em.a_mat, fine.a_mat) <= 1e-12 * dense_max_abs(em.a_mat));
  CHECK(oracle::rel_inf_diff(em.load, fine.load) <= 1e-13);
  CHECK(hdiv_decomposition_error(em) <= 1e-12);
  const auto ev = symmetric_eigenvalues(em.a_mat);
  CHECK(ev.front() > 0.0);
}

TEST_CASE("local dof maps") {
  SUBCASE("single cell k=0 alternates signs") {
    const RtSpace sp = build_space(build_mesh(3, {1, 1, 1}, {1, 1, 1}), 0);
    const auto map = local_dof_map(sp, 0);
    REQUIRE(map.size() == 6);
    const double expected[6] = {-1, +1, -1, +1, -1, +1};
    for (int l = 0; l < 6; ++l) {
      CHECK(map[static_cast<std::size_t>(l)].global == l);
      CHECK(map[static_cast<std::size_t>(l)].sign == expected[l]);
    }
  }
  SUBCASE("2x1x1 shared dof has opposite signs") {
    const RtSpace sp = build_space(build_mesh(3, {2, 1, 1}, {0.5, 1, 1}), 0);
    const auto m0 = local_dof_map(sp, 0);
    const auto m1 = local_dof_map(sp, 1);
    CHECK(m0[1].global == m1[0].global);  // shared +x/-x face dof
    CHECK(m0[1].sign == 1.0);
    CHECK(m1[0].sign == -1.0);
  }
  SUBCASE("assembled A is SPD on the 2^3 mesh (dense eigencheck)") {
    const CartesianMesh mesh = unit_cube_mesh(2);
    const RtSpace sp = build_space(mesh, 0);
    const CellCoefficients coeffs = uniform_coefficients(mesh, 1.0, 1.0);
    const ReductionInputs in = build_reduction_inputs(sp, coeffs);
    const auto [a, f] = assemble(in);
    const DenseMatrix ad = to_dense(a);
    CHECK(oracle::max_abs_diff(ad, dense_transpose(ad)) <= 1e-13 * dense_max_abs(ad));
    const auto ev = symmetric_eigenvalues(ad);
    CHECK(ev.front() > 0.0);
  }
}

TEST_CASE("patch test: constant field is mass-exact") {
  // u = (1,0,0) interpolates exactly in RT0; with alpha=beta=1 its image
  // under A is the load of g = (1,0,0) because div u = 0.
  const CartesianMesh mesh = build_mesh(3, {3, 2, 2}, {1.0 / 3, 0.5, 0.5});
  const RtSpace sp = build_space(mesh, 0);
  const CellCoefficients coeffs = uniform_coefficients(mesh, 1.0, 1.0);
  const ReductionInputs in = build_reduction_inputs(sp, coeffs, false, {1.0, 0.0, 0.0});
  const auto [a, f] = assemble(in);

  std::vector<double> u(static_cast<std::size_t>(sp.ndofs), 0.0);
  for (index_t face = 0; face < mesh.nfaces(); ++face)
    if (mesh.face(face).axis == 0) u[static_cast<std::size_t>(face)] = 1.0;

  const std::vector<double> au = spmv(a, u);
  CHECK(oracle::rel_inf_diff(au, f) <= 1e-12);
}

TEST_CASE("k=1 patch test with interior dofs") {
  const CartesianMesh mesh = build_mesh(3, {2, 2, 2}, {0.5, 0.5, 0.5});
  const RtSpace sp = build_space(mesh, 1);
  const CellCoefficients coeffs = uniform_coefficients(mesh, 1.0, 1.0);
  const ReductionInputs in = build_reduction_inputs(sp, coeffs, false, {1.0, 0.0, 0.0});
  const auto [a, f] = assemble(in);

  // constant u = (1,0,0): face-average dofs on x faces and the first
  // x-component interior moment of each cell are 1
  std::vector<double> u(static_cast<std::size_t>(sp.ndofs), 0.0);
  for (index_t face = 0; face < mesh.nfaces(); ++face)
    if (mesh.face(face).axis == 0) u[static_cast<std::size_t>(face * sp.dofs_per_face)] = 1.0;
  for (index_t cell = 0; cell < mesh.ncells(); ++cell)
    u[static_cast<std::size_t>(sp.face_dof_count + cell * sp.interior_dofs_per_cell)] = 1.0;

  const std::vector<double> au = spmv(a, u);
  CHECK(oracle::rel_inf_diff(au, f) <= 1e-12);
}
