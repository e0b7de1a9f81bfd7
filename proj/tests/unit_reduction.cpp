#include <doctest.h>

#include <cmath>

#include "hdivred/errors.hpp"
#include "hdivred/reduction.hpp"
#include "hdivred/reference.hpp"
#include "hdivred/solvers.hpp"
#include "test_support.hpp"

using namespace hdivred;

namespace {

CartesianMesh cube(index_t n) {
  const double h = 1.0 / static_cast<double>(n);
  return build_mesh(3, {n, n, n}, {h, h, h});
}

ReductionInputs fem_inputs(index_t n, int order, bool weighted = false, double alpha = 1.0, double beta = 1.0) {
  const CartesianMesh mesh = cube(n);
  const RtSpace sp = build_space(mesh, order);
  return build_reduction_inputs(sp, uniform_coefficients(mesh, alpha, beta), weighted);
}

// H = C A_hat^-1 C^T through the test-local Gauss-Jordan inverse.
DenseMatrix dense_h_oracle(const ReductionInputs& in) {
  const DenseMatrix a_hat = to_dense(in.a_hat);
  const DenseMatrix ainv = oracle::gauss_jordan_inverse(a_hat);
  const DenseMatrix c = to_dense(in.c_mat);
  return dense_multiply(c, dense_multiply(ainv, dense_transpose(c)));
}

}  // namespace

TEST_CASE("build_P structure") {
  SUBCASE("single cell k=0 is the signed identity") {
    const RtSpace sp = build_space(cube(1), 0);
    const DenseMatrix p = to_dense(build_P(sp));
    const double expected[6] = {-1, +1, -1, +1, -1, +1};
    for (index_t i = 0; i < 6; ++i)
      for (index_t j = 0; j < 6; ++j) CHECK(p(i, j) == (i == j ? expected[i] : 0.0));
  }
  SUBCASE("2x1x1 mesh: one shared column with opposite signs") {
    const RtSpace sp = build_space(build_mesh(3, {2, 1, 1}, {0.5, 1, 1}), 0);
    const CsrMatrix p = build_P(sp);
    CHECK(p.nrows == 12);
    CHECK(p.ncols == 11);
    const CsrMatrix pt = transpose(p);
    int shared_cols = 0;
    for (index_t c = 0; c < pt.nrows; ++c) {
      const auto vals = pt.row_vals(c);
      if (vals.size() == 2) {
        ++shared_cols;
        CHECK(vals[0] * vals[1] == -1.0);
      } else {
        REQUIRE(vals.size() == 1);
      }
    }
    CHECK(shared_cols == 1);
  }
  SUBCASE("P has full column rank on the 2^3 mesh (spectral oracle)") {
    const RtSpace sp = build_space(cube(2), 0);
    const CsrMatrix p = build_P(sp);
    // singular values of P are the square roots of eig(P^T P)
    const CsrMatrix ptp = triple_product(transpose(p), CsrMatrix::identity(p.nrows), p);
    const auto ev = symmetric_eigenvalues(to_dense(ptp));
    CHECK(ev.front() >= 1.0 - 1e-12);  // smallest singular value >= 1
  }
}

TEST_CASE("build_C structure") {
  SUBCASE("2x1x1 mesh k=0: one row, two +1 entries") {
    const RtSpace sp = build_space(build_mesh(3, {2, 1, 1}, {0.5, 1, 1}), 0);
    const CsrMatrix c = build_C(sp, false);
    CHECK(c.nrows == 1);
    CHECK(c.ncols == 12);
    REQUIRE(c.nnz() == 2);
    CHECK(c.values[0] == 1.0);
    CHECK(c.values[1] == 1.0);
  }
  SUBCASE("2^3 mesh k=0: m equals the interior face count") {
    const RtSpace sp = build_space(cube(2), 0);
    const CsrMatrix c = build_C(sp, false);
    CHECK(c.nrows == 12);
    CHECK(c.nrows == sp.broken_ndofs - sp.ndofs);
  }
  SUBCASE("C*P = 0 exactly, both orders and weightings, assorted meshes") {
    for (int order = 0; order <= 1; ++order) {
      for (index_t n : {1, 2, 3}) {
        const RtSpace sp = build_space(cube(n), order);
        const CsrMatrix p = build_P(sp);
        for (bool weighted : {false, true}) {
          const CsrMatrix c = build_C(sp, weighted);
          const CsrMatrix cp = triple_product(c, CsrMatrix::identity(sp.broken_ndofs), p);
          CHECK(max_abs(cp) <= (weighted ? 1e-14 : 0.0));
        }
      }
    }
  }
  SUBCASE("weighted rows scale with the face mass") {
    // k=0: multiplier row = |F| * unweighted row
    const CartesianMesh mesh = build_mesh(3, {2, 1, 1}, {0.5, 0.25, 2.0});
    const RtSpace sp = build_space(mesh, 0);
    const CsrMatrix cw = build_C(sp, true);
    REQUIRE(cw.nnz() == 2);
    CHECK(std::abs(cw.values[0] - 0.5) <= 1e-15);  // area of the shared x face
    CHECK(std::abs(cw.values[1] - 0.5) <= 1e-15);
  }
  SUBCASE("k=1 face mass block is |F| times the identity in the normalized moment basis") {
    const CartesianMesh mesh = build_mesh(3, {2, 1, 1}, {0.5, 0.25, 2.0});
    const RtSpace sp = build_space(mesh, 1);
    const CsrMatrix cw = build_C(sp, true);
    REQUIRE(cw.nrows == 4);
    const DenseMatrix cd = to_dense(cw);
    const double area = 0.5;
    for (index_t r = 0; r < 4; ++r) {
      for (index_t col = 0; col < cw.ncols; ++col) {
        double expected = 0.0;
        // each copy's sub-dof r carries the diagonal entry |F|
        const index_t lm = sp.interior_dofs_per_cell + 1 * sp.dofs_per_face + r;      // +x slot of cell 0
        const index_t lp = sp.element_ndofs + sp.interior_dofs_per_cell + 0 * sp.dofs_per_face + r;  // -x slot of cell 1
        if (col == lm || col == lp) expected = area;
        CHECK(std::abs(cd(r, col) - expected) <= 1e-13 * area);
      }
    }
  }
  SUBCASE("zero columns exactly at interior and boundary dofs") {
    const RtSpace sp = build_space(cube(2), 1);
    const CsrMatrix c = build_C(sp, true);
    const CsrMatrix ct = transpose(c);
    index_t used = 0;
    for (index_t col = 0; col < ct.nrows; ++col)
      if (!ct.row_cols(col).empty()) ++used;
    // each interior face contributes its dofs twice (one copy per cell)
    CHECK(used == 2 * 12 * sp.dofs_per_face);
  }
}

TEST_CASE("assemble matches the dense oracle") {
  SUBCASE("single cell: sign conjugation is invisible on the diagonal block") {
    const CartesianMesh mesh = cube(1);
    const RtSpace sp = build_space(mesh, 0);
    const CellCoefficients coeffs = uniform_coefficients(mesh, 1.0, 1.0);
    const ReductionInputs in = build_reduction_inputs(sp, coeffs);
    const auto [a, f] = assemble(in);
    const ElementMatrices em = element_matrices(sp, 0, coeffs);
    // A = D a D with D the sign diagonal; D f as well
    const DenseMatrix ad = to_dense(a);
    const double sgn[6] = {-1, +1, -1, +1, -1, +1};
    for (index_t i = 0; i < 6; ++i) {
      CHECK(std::abs(f[static_cast<std::size_t>(i)] - sgn[i] * em.load[static_cast<std::size_t>(i)]) <= 1e-15);
      for (index_t j = 0; j < 6; ++j)
        CHECK(std::abs(ad(i, j) - sgn[i] * sgn[j] * em.a_mat(i, j)) <= 1e-15);
    }
  }
  SUBCASE("2^3 k=0: dense P^T A_hat P") {
    const ReductionInputs in = fem_inputs(2, 0);
    const auto [a, f] = assemble(in);
    const DenseMatrix pd = to_dense(in.p_mat);
    const DenseMatrix ref = oracle::dense_rap(dense_transpose(pd), to_dense(in.a_hat), pd);
    CHECK(oracle::max_abs_diff(to_dense(a), ref) <= 1e-13 * dense_max_abs(ref));
    CHECK(oracle::rel_inf_diff(f, dense_apply(dense_transpose(pd), in.f_hat)) <= 1e-14);
  }
}

TEST_CASE("hybridize") {
  SUBCASE("identity blocks with a two-copy constraint give H = [2]") {
    ReductionInputs in;
    in.a_hat.global_dim = 1;
    in.a_hat.broken_dim = 2;
    in.a_hat.blocks.resize(2);
    in.a_hat.blocks[0].dof_map = {{0, 1.0}};
    in.a_hat.blocks[0].matrix = DenseMatrix::identity(1);
    in.a_hat.blocks[1].dof_map = {{0, -1.0}};
    in.a_hat.blocks[1].matrix = DenseMatrix::identity(1);
    in.p_mat = CsrMatrix::from_triplets(2, 1, {0, 1}, {0, 0}, {1.0, -1.0});
    in.c_mat = CsrMatrix::from_triplets(1, 2, {0, 0}, {0, 1}, {1.0, 1.0});
    in.f_hat = {0.0, 0.0};
    validate_reduction_inputs(in);
    const auto [op, g] = hybridize(in);
    REQUIRE(op.h_mat.nrows == 1);
    CHECK(op.h_mat.values == std::vector<double>{2.0});
    CHECK(g == std::vector<double>{0.0});
  }
  SUBCASE("2x1x1 k=0: the 1x1 H equals the dense inverse oracle") {
    const CartesianMesh mesh = build_mesh(3, {2, 1, 1}, {0.5, 1, 1});
    const RtSpace sp = build_space(mesh, 0);
    const ReductionInputs in = build_reduction_inputs(sp, uniform_coefficients(mesh, 1.0, 1.0));
    const auto [op, g] = hybridize(in);
    REQUIRE(op.h_mat.nrows == 1);
    const DenseMatrix href = dense_h_oracle(in);
    CHECK(oracle::max_abs_diff(to_dense(op.h_mat), href) <= 1e-12 * dense_max_abs(href));
  }
  SUBCASE("2^3 k=0: H equals the dense inverse oracle") {
    const ReductionInputs in = fem_inputs(2, 0);
    const auto [op, g] = hybridize(in);
    const DenseMatrix href = dense_h_oracle(in);
    CHECK(oracle::max_abs_diff(to_dense(op.h_mat), href) <= 1e-12 * dense_max_abs(href));
  }
  SUBCASE("2^3 k=1: H equals the dense inverse oracle, both weightings") {
    for (bool weighted : {false, true}) {
      const ReductionInputs in = fem_inputs(2, 1, weighted);
      const auto [op, g] = hybridize(in);
      const DenseMatrix href = dense_h_oracle(in);
      CHECK(oracle::max_abs_diff(to_dense(op.h_mat), href) <= 1e-11 * dense_max_abs(href));
    }
  }
  SUBCASE("H is symmetric and SPD on 3^3 k=0") {
    const ReductionInputs in = fem_inputs(3, 0);
    const auto [op, g] = hybridize(in);
    const DenseMatrix h = to_dense(op.h_mat);
    CHECK(oracle::max_abs_diff(h, dense_transpose(h)) <= 1e-12 * dense_max_abs(h));
    CHECK(cholesky_pivots_positive(h));
  }
  SUBCASE("H and S stay numerically symmetric under extreme coefficient jumps") {
    const CartesianMesh mesh = cube(4);
    const RtSpace sp = build_space(mesh, 1);
    const ReductionInputs in = build_reduction_inputs(sp, soft_hard_coefficients(mesh, -8));
    const auto [hyb, g] = hybridize(in);
    CHECK(max_abs_difference(hyb.h_mat, transpose(hyb.h_mat)) <= 1e-12 * max_abs(hyb.h_mat));
    const auto [cond, f_s] = static_condense(in);
    CHECK(max_abs_difference(cond.s_mat, transpose(cond.s_mat)) <= 1e-12 * max_abs(cond.s_mat));
  }
  SUBCASE("singular interior block reports SingularBlock") {
    ReductionInputs in;
    in.a_hat.global_dim = 2;
    in.a_hat.broken_dim = 4;
    in.a_hat.blocks.resize(2);
    // dof 0 of each block is unconstrained (interior) but carries a zero diagonal
    in.a_hat.blocks[0].dof_map = {{0, 1.0}, {1, 1.0}};
    in.a_hat.blocks[0].matrix = DenseMatrix(2, 2);
    in.a_hat.blocks[0].matrix(1, 1) = 1.0;
    in.a_hat.blocks[1].dof_map = {{0, 1.0}, {1, -1.0}};
    in.a_hat.blocks[1].matrix = DenseMatrix::identity(2);
    in.p_mat = CsrMatrix::from_triplets(4, 2, {0, 1, 2, 3}, {0, 1, 0, 1}, {1, 1, 1, -1});
    // only local dof 1 of each block is constrained; dof 0 is interior with a
    // zero diagonal, so the A_ii factorization must fail
    in.c_mat = CsrMatrix::from_triplets(1, 4, {0, 0}, {1, 3}, {1.0, 1.0});
    in.f_hat.assign(4, 0.0);
    CHECK_THROWS_AS(hybridize(in), SingularBlock);
  }
}

TEST_CASE("recover_hybrid") {
  SUBCASE("2x1x1: recovered solution matches the dense assembled solve") {
    const ReductionInputs in = fem_inputs(2, 0);
    const auto [a, f] = assemble(in);
    const std::vector<double> x_ref = oracle::gauss_solve(to_dense(a), f);
    auto [op, g] = hybridize(in);
    const std::vector<double> lambda = oracle::gauss_solve(to_dense(op.h_mat), g);
    const auto [x_hat, x] = recover_hybrid(op, lambda, in.f_hat);
    CHECK(oracle::rel_inf_diff(x, x_ref) <= 1e-10);
    // continuity restored
    const std::vector<double> cx = spmv(in.c_mat, x_hat);
    CHECK(oracle::inf_norm(cx) <= 1e-10 * oracle::inf_norm(x_hat));
  }
  SUBCASE("zero rhs gives zero everything") {
    ReductionInputs in = fem_inputs(2, 0);
    std::fill(in.f_hat.begin(), in.f_hat.end(), 0.0);
    auto [op, g] = hybridize(in);
    CHECK(oracle::inf_norm(g) == 0.0);
    const std::vector<double> lambda(static_cast<std::size_t>(op.h_mat.nrows), 0.0);
    const auto [x_hat, x] = recover_hybrid(op, lambda, in.f_hat);
    CHECK(oracle::inf_norm(x_hat) == 0.0);
    CHECK(oracle::inf_norm(x) == 0.0);
  }
  SUBCASE("single element (m = 0) short-circuits to the direct solve") {
    const ReductionInputs in = fem_inputs(1, 1);
    auto [op, g] = hybridize(in);
    CHECK(op.h_mat.nrows == 0);
    CHECK(g.empty());
    const auto [x_hat, x] = recover_hybrid(op, {}, in.f_hat);
    const std::vector<double> ref = oracle::gauss_solve(to_dense(in.a_hat), in.f_hat);
    CHECK(oracle::rel_inf_diff(x_hat, ref) <= 1e-11);
  }
}

TEST_CASE("static condensation") {
  SUBCASE("k=0: S equals assembled A entrywise") {
    const ReductionInputs in = fem_inputs(4, 0);
    const auto [a, f] = assemble(in);
    const auto [op, f_s] = static_condense(in);
    CHECK(op.s_mat.nrows == a.nrows);
    CHECK(max_abs_difference(op.s_mat, a) <= 1e-13 * max_abs(a));
    CHECK(oracle::rel_inf_diff(f_s, f) <= 1e-14);
  }
  SUBCASE("1-cell k=1: single-block Schur complement, sign conjugated") {
    const CartesianMesh mesh = cube(1);
    const RtSpace sp = build_space(mesh, 1);
    const CellCoefficients coeffs = uniform_coefficients(mesh, 1.0, 1.0);
    const ReductionInputs in = build_reduction_inputs(sp, coeffs);
    const auto [op, f_s] = static_condense(in);
    REQUIRE(op.s_mat.nrows == 24);

    const ElementMatrices em = element_matrices(sp, 0, coeffs);
    // interior dofs come first in the local order
    const index_t ni = sp.interior_dofs_per_cell, nb = 24;
    DenseMatrix a_ii(ni, ni), a_ib(ni, nb), a_bi(nb, ni), a_bb(nb, nb);
    for (index_t i = 0; i < ni; ++i)
      for (index_t j = 0; j < ni; ++j) a_ii(i, j) = em.a_mat(i, j);
    for (index_t i = 0; i < ni; ++i)
      for (index_t j = 0; j < nb; ++j) a_ib(i, j) = em.a_mat(i, ni + j);
    for (index_t i = 0; i < nb; ++i)
      for (index_t j = 0; j < ni; ++j) a_bi(i, j) = em.a_mat(ni + i, j);
    for (index_t i = 0; i < nb; ++i)
      for (index_t j = 0; j < nb; ++j) a_bb(i, j) = em.a_mat(ni + i, ni + j);
    const DenseMatrix schur =
        dense_add(a_bb, dense_multiply(a_bi, dense_multiply(oracle::gauss_jordan_inverse(a_ii), a_ib)), -1.0);

    const auto map = local_dof_map(sp, 0);
    const DenseMatrix s = to_dense(op.s_mat);
    for (index_t i = 0; i < nb; ++i) {
      for (index_t j = 0; j < nb; ++j) {
        const auto& di = map[static_cast<std::size_t>(ni + i)];
        const auto& dj = map[static_cast<std::size_t>(ni + j)];
        // master ordinals coincide with global face-dof ids on one cell
        CHECK(std::abs(s(di.global, dj.global) - di.sign * dj.sign * schur(i, j)) <=
              1e-12 * dense_max_abs(schur));
      }
    }
  }
  SUBCASE("2^3 k=1: S equals the dense interface-Schur oracle") {
    const ReductionInputs in = fem_inputs(2, 1);
    const auto [op, f_s] = static_condense(in);

    // oracle: dense Schur over the broken interface dofs, then P_b^T . P_b
    const DenseMatrix a_hat = to_dense(in.a_hat);
    std::vector<index_t> b_idx, i_idx;
    index_t row = 0;
    for (const auto& blk : in.a_hat.blocks)
      for (const auto& d : blk.dof_map) {
        (d.global < in.interior_global_begin ? b_idx : i_idx).push_back(row);
        ++row;
      }
    const index_t nb = static_cast<index_t>(b_idx.size()), ni = static_cast<index_t>(i_idx.size());
    DenseMatrix a_bb(nb, nb), a_bi(nb, ni), a_ib(ni, nb), a_ii(ni, ni);
    for (index_t i = 0; i < nb; ++i)
      for (index_t j = 0; j < nb; ++j) a_bb(i, j) = a_hat(b_idx[static_cast<std::size_t>(i)], b_idx[static_cast<std::size_t>(j)]);
    for (index_t i = 0; i < nb; ++i)
      for (index_t j = 0; j < ni; ++j) a_bi(i, j) = a_hat(b_idx[static_cast<std::size_t>(i)], i_idx[static_cast<std::size_t>(j)]);
    for (index_t i = 0; i < ni; ++i)
      for (index_t j = 0; j < nb; ++j) a_ib(i, j) = a_hat(i_idx[static_cast<std::size_t>(i)], b_idx[static_cast<std::size_t>(j)]);
    for (index_t i = 0; i < ni; ++i)
      for (index_t j = 0; j < ni; ++j) a_ii(i, j) = a_hat(i_idx[static_cast<std::size_t>(i)], i_idx[static_cast<std::size_t>(j)]);
    const DenseMatrix schur =
        dense_add(a_bb, dense_multiply(a_bi, dense_multiply(oracle::gauss_jordan_inverse(a_ii), a_ib)), -1.0);

    const DenseMatrix pd = to_dense(in.p_mat);
    DenseMatrix p_b(nb, in.p_mat.ncols);
    for (index_t i = 0; i < nb; ++i)
      for (index_t j = 0; j < in.p_mat.ncols; ++j) p_b(i, j) = pd(b_idx[static_cast<std::size_t>(i)], j);
    const DenseMatrix s_full = oracle::dense_rap(dense_transpose(p_b), schur, p_b);

    // masters are exactly the global face dofs here
    const index_t n_master = op.s_mat.nrows;
    REQUIRE(n_master == static_cast<index_t>(op.master_globals.size()));
    const DenseMatrix s = to_dense(op.s_mat);
    double err = 0.0;
    for (index_t i = 0; i < n_master; ++i)
      for (index_t j = 0; j < n_master; ++j)
        err = std::max(err, std::abs(s(i, j) - s_full(op.master_globals[static_cast<std::size_t>(i)],
                                                      op.master_globals[static_cast<std::size_t>(j)])));
    CHECK(err <= 1e-11 * dense_max_abs(s_full));
  }
}

TEST_CASE("recover_condensed") {
  SUBCASE("k=0 is the identity recovery") {
    const ReductionInputs in = fem_inputs(2, 0);
    const auto [op, f_s] = static_condense(in);
    std::vector<double> x_b(static_cast<std::size_t>(op.s_mat.nrows));
    for (std::size_t i = 0; i < x_b.size(); ++i) x_b[i] = static_cast<double>(i) * 0.5 - 1.0;
    const std::vector<double> x = recover_condensed(op, x_b, in.f_hat);
    CHECK(x == x_b);
  }
  SUBCASE("1-cell k=1 matches the dense element solve") {
    const ReductionInputs in = fem_inputs(1, 1);
    const auto [a, f] = assemble(in);
    const std::vector<double> x_ref = oracle::gauss_solve(to_dense(a), f);
    const auto [op, f_s] = static_condense(in);
    const std::vector<double> x_b = oracle::gauss_solve(to_dense(op.s_mat), f_s);
    const std::vector<double> x = recover_condensed(op, x_b, in.f_hat);
    CHECK(oracle::rel_inf_diff(x, x_ref) <= 1e-10);
  }
  SUBCASE("zero rhs and zero masters give zero") {
    const ReductionInputs in = fem_inputs(2, 1);
    const auto [op, f_s] = static_condense(in);
    const std::vector<double> x =
        recover_condensed(op, std::vector<double>(static_cast<std::size_t>(op.s_mat.nrows), 0.0),
                          std::vector<double>(static_cast<std::size_t>(in.n_hat()), 0.0));
    CHECK(oracle::inf_norm(x) == 0.0);
  }
}

TEST_CASE("eliminate_essential") {
  SUBCASE("all boundary faces of a single cell empties the system") {
    const CartesianMesh mesh = cube(1);
    const RtSpace sp = build_space(mesh, 0);
    const ReductionInputs in = build_reduction_inputs(sp, uniform_coefficients(mesh, 1.0, 1.0));
    std::vector<EssentialBc> bcs;
    for (index_t f = 0; f < mesh.nfaces(); ++f) bcs.push_back({f, 0.0});
    const EliminationResult out = eliminate_essential(sp, in, bcs);
    CHECK(out.inputs.n_hat() == 0);
    CHECK(out.inputs.n_global() == 0);
    CHECK(out.inputs.c_mat.nrows == 0);
  }
  SUBCASE("prescribed value feeds the rhs") {
    const CartesianMesh mesh = cube(1);
    const RtSpace sp = build_space(mesh, 0);
    const ReductionInputs in = build_reduction_inputs(sp, uniform_coefficients(mesh, 1.0, 1.0));
    const double c_val = 2.5;
    const EliminationResult out = eliminate_essential(sp, in, {{0, c_val}});
    REQUIRE(out.inputs.n_hat() == 5);
    // eliminated local dof 0 has sign -1, so the local value is -c
    const auto& blk = in.a_hat.blocks[0];
    for (index_t i = 0; i < 5; ++i) {
      const double expect = in.f_hat[static_cast<std::size_t>(i + 1)] - blk.matrix(i + 1, 0) * (-c_val);
      CHECK(std::abs(out.inputs.f_hat[static_cast<std::size_t>(i)] - expect) <= 1e-15);
    }
  }
  SUBCASE("interior face is rejected") {
    const CartesianMesh mesh = cube(2);
    const RtSpace sp = build_space(mesh, 0);
    const ReductionInputs in = build_reduction_inputs(sp, uniform_coefficients(mesh, 1.0, 1.0));
    index_t interior_face = -1;
    for (index_t f = 0; f < mesh.nfaces(); ++f)
      if (!mesh.face(f).is_boundary) {
        interior_face = f;
        break;
      }
    CHECK_THROWS_AS(eliminate_essential(sp, in, {{interior_face, 0.0}}), std::invalid_argument);
  }
  SUBCASE("elimination agrees with the penalty oracle") {
    const CartesianMesh mesh = cube(2);
    const RtSpace sp = build_space(mesh, 0);
    const ReductionInputs in = build_reduction_inputs(sp, uniform_coefficients(mesh, 1.0, 1.0));
    std::vector<EssentialBc> bcs;
    double c_val = 0.0;
    for (index_t f = 0; f < mesh.nfaces(); ++f)
      if (mesh.face(f).is_boundary) {
        c_val += 0.125;
        bcs.push_back({f, c_val});
      }
    const EliminationResult out = eliminate_essential(sp, in, bcs);
    const auto [a_red, f_red] = assemble(out.inputs);
    const std::vector<double> x_red = oracle::gauss_solve(to_dense(a_red), f_red);
    const std::vector<double> x_elim = expand_eliminated(out, x_red, sp.ndofs);

    // penalty route on the full assembled system
    const auto [a, f] = assemble(in);
    DenseMatrix ad = to_dense(a);
    std::vector<double> fp = f;
    const double kappa = 1e12;
    for (const EssentialBc& bc : bcs) {
      const index_t dof = bc.face * sp.dofs_per_face;
      ad(dof, dof) += kappa;
      fp[static_cast<std::size_t>(dof)] += kappa * bc.normal_flux;
    }
    const std::vector<double> x_pen = oracle::gauss_solve(ad, fp);
    CHECK(oracle::rel_inf_diff(x_elim, x_pen) <= 1e-4);
  }
}

TEST_CASE("near-nullspace of C Y C^T") {
  SUBCASE("no multipliers on a single cell") {
    const CartesianMesh mesh = cube(1);
    const RtSpace sp = build_space(mesh, 0);
    CHECK(near_nullspace_check(sp, uniform_coefficients(mesh, 1.0, 1.0)).empty());
  }
  SUBCASE("2^3 and 3^3 k=0: at most one near-zero eigenvalue") {
    for (index_t n : {2, 3}) {
      const CartesianMesh mesh = cube(n);
      const RtSpace sp = build_space(mesh, 0);
      const auto ev = near_nullspace_check(sp, uniform_coefficients(mesh, 1.0, 1.0));
      REQUIRE(!ev.empty());
      index_t low = 0;
      for (double e : ev)
        if (e < 1e-10 * ev.back()) ++low;
      CHECK(low <= 1);
    }
  }
}

TEST_CASE("reference paths track the production pipeline") {
  // a mild coefficient jump keeps the multiplier nontrivial (uniform
  // coefficients make lambda identically zero on congruent cells)
  const CartesianMesh mesh = cube(2);
  const RtSpace sp = build_space(mesh, 1);
  const ReductionInputs in = build_reduction_inputs(sp, soft_hard_coefficients(mesh, 4));
  const ReferencePaths ref = reference_paths(in);

  const auto [a, f] = assemble(in);
  const std::vector<double> x_asm = dense_solve(a, f);
  CHECK(oracle::rel_inf_diff(x_asm, ref.assembled) <= 1e-10);

  auto [hyb, g] = hybridize(in);
  const std::vector<double> lambda = dense_solve(hyb.h_mat, g);
  const auto [x_hat, x_rec] = recover_hybrid(hyb, lambda, in.f_hat);
  CHECK(oracle::rel_inf_diff(x_rec, ref.hybridized) <= 1e-10);
  CHECK(oracle::rel_inf_diff(x_hat, ref.x_hat) <= 1e-10);
  CHECK(oracle::rel_inf_diff(lambda, ref.lambda) <= 1e-10);
  CHECK(oracle::max_abs_diff(to_dense(hyb.h_mat), ref.h_dense) <= 1e-11 * dense_max_abs(ref.h_dense));

  const auto [cond, f_s] = static_condense(in);
  const std::vector<double> x_b = dense_solve(cond.s_mat, f_s);
  CHECK(oracle::rel_inf_diff(recover_condensed(cond, x_b, in.f_hat), ref.condensed) <= 1e-10);

  CHECK(ref.equivalence_error <= 1e-18);
  CHECK(ref.constraint_residual <= 1e-18);
  CHECK(ref.primal_residual <= 1e-18);
  CHECK(ref.energy_error <= 1e-18);
  CHECK(ref.master_error <= 1e-18);
}

TEST_CASE("condensation on imported inputs falls back to the algebraic partition") {
  // the import path carries no interior marker; the algebraic partition
  // treats unconstrained boundary dofs as interior, yet the recovered
  // solution must match the marker-based FE condensation
  ReductionInputs in = fem_inputs(2, 1);
  const auto [cond_fe, f_fe] = static_condense(in);
  const std::vector<double> x_fe =
      recover_condensed(cond_fe, dense_solve(cond_fe.s_mat, f_fe), in.f_hat);

  ReductionInputs algebraic = in;
  algebraic.interior_global_begin = -1;
  const auto [cond_alg, f_alg] = static_condense(algebraic);
  CHECK(cond_alg.s_mat.nrows < cond_fe.s_mat.nrows);  // boundary dofs eliminated too
  const std::vector<double> x_alg =
      recover_condensed(cond_alg, dense_solve(cond_alg.s_mat, f_alg), algebraic.f_hat);
  CHECK(oracle::rel_inf_diff(x_fe, x_alg) <= 1e-10);
}

TEST_CASE("essential elimination with k=1 faces") {
  const CartesianMesh mesh = cube(2);
  const RtSpace sp = build_space(mesh, 1);
  const ReductionInputs in = build_reduction_inputs(sp, uniform_coefficients(mesh, 1.0, 1.0));
  std::vector<EssentialBc> bcs;
  for (index_t f = 0; f < mesh.nfaces(); ++f)
    if (mesh.face(f).is_boundary) bcs.push_back({f, 0.5});
  const EliminationResult out = eliminate_essential(sp, in, bcs);
  // every face loses dofs_per_face broken copies per adjacent cell
  CHECK(out.inputs.n_global() == in.n_global() - static_cast<index_t>(bcs.size()) * sp.dofs_per_face);
  CHECK(out.inputs.c_mat.nrows == in.c_mat.nrows);

  const auto [a_red, f_red] = assemble(out.inputs);
  const std::vector<double> x_red = oracle::gauss_solve(to_dense(a_red), f_red);
  const std::vector<double> x_elim = expand_eliminated(out, x_red, sp.ndofs);

  // penalty oracle on the full system: pin the average-flux dof of each
  // boundary face to 0.5 and its higher moments to zero
  const auto [a, f] = assemble(in);
  DenseMatrix ad = to_dense(a);
  std::vector<double> fp = f;
  const double kappa = 1e12;
  for (const EssentialBc& bc : bcs) {
    for (index_t sub = 0; sub < sp.dofs_per_face; ++sub) {
      const index_t dof = bc.face * sp.dofs_per_face + sub;
      ad(dof, dof) += kappa;
      fp[static_cast<std::size_t>(dof)] += kappa * (sub == 0 ? bc.normal_flux : 0.0);
    }
  }
  const std::vector<double> x_pen = oracle::gauss_solve(ad, fp);
  CHECK(oracle::rel_inf_diff(x_elim, x_pen) <= 1e-4);
}

TEST_CASE("general weighted duplication maps run through the same pipeline") {
  // A hanging-node style instance: the slave copy equals the average of two
  // master dofs, so P has a two-entry row and P^T P is not diagonal.
  //   globals: g0, g1 (masters), g2 (independent)
  //   broken:  r0 = g0, r1 = g1 | r2 = (g0 + g1)/2, r3 = g2
  ReductionInputs in;
  in.a_hat.global_dim = 3;
  in.a_hat.broken_dim = 4;
  in.a_hat.blocks.resize(2);
  in.a_hat.blocks[0].dof_map = {{0, 1.0}, {1, 1.0}};
  in.a_hat.blocks[0].matrix = DenseMatrix(2, 2);
  in.a_hat.blocks[0].matrix(0, 0) = 2.0;
  in.a_hat.blocks[0].matrix(0, 1) = 0.3;
  in.a_hat.blocks[0].matrix(1, 0) = 0.3;
  in.a_hat.blocks[0].matrix(1, 1) = 1.0;
  in.a_hat.blocks[1].dof_map = {{0, 1.0}, {2, 1.0}};  // nominal; P carries the real weights
  in.a_hat.blocks[1].matrix = DenseMatrix(2, 2);
  in.a_hat.blocks[1].matrix(0, 0) = 1.5;
  in.a_hat.blocks[1].matrix(0, 1) = 0.2;
  in.a_hat.blocks[1].matrix(1, 0) = 0.2;
  in.a_hat.blocks[1].matrix(1, 1) = 3.0;
  in.p_mat = CsrMatrix::from_triplets(4, 3, {0, 1, 2, 2, 3}, {0, 1, 0, 1, 2}, {1.0, 1.0, 0.5, 0.5, 1.0});
  in.c_mat = CsrMatrix::from_triplets(1, 4, {0, 0, 0}, {0, 1, 2}, {-0.5, -0.5, 1.0});
  in.f_hat = {1.0, -0.5, 2.0, 0.25};

  // C P = 0 by construction
  const CsrMatrix cp = triple_product(in.c_mat, CsrMatrix::identity(4), in.p_mat);
  CHECK(max_abs(cp) == 0.0);

  // dense saddle-point oracle [[A_hat, C^T], [C, 0]]
  const DenseMatrix a_hat = to_dense(in.a_hat);
  DenseMatrix saddle(5, 5);
  for (index_t i = 0; i < 4; ++i)
    for (index_t j = 0; j < 4; ++j) saddle(i, j) = a_hat(i, j);
  saddle(0, 4) = saddle(4, 0) = -0.5;
  saddle(1, 4) = saddle(4, 1) = -0.5;
  saddle(2, 4) = saddle(4, 2) = 1.0;
  std::vector<double> rhs(in.f_hat);
  rhs.push_back(0.0);
  const std::vector<double> saddle_sol = oracle::gauss_solve(saddle, rhs);
  const std::vector<double> x_hat_ref(saddle_sol.begin(), saddle_sol.begin() + 4);

  // assembled oracle x = (P^T A_hat P)^-1 P^T f_hat
  const DenseMatrix pd = to_dense(in.p_mat);
  const DenseMatrix a_glob = oracle::dense_rap(dense_transpose(pd), a_hat, pd);
  const std::vector<double> x_ref = oracle::gauss_solve(a_glob, dense_apply(dense_transpose(pd), in.f_hat));

  SUBCASE("hybridization recovers through the non-diagonal Gram matrix") {
    auto [op, g] = hybridize(in);
    CHECK_FALSE(op.diagonal_gram);
    REQUIRE(op.h_mat.nrows == 1);
    const std::vector<double> lambda = oracle::gauss_solve(to_dense(op.h_mat), g);
    const auto [x_hat, x] = recover_hybrid(op, lambda, in.f_hat);
    CHECK(oracle::rel_inf_diff(x_hat, x_hat_ref) <= 1e-12);
    CHECK(oracle::rel_inf_diff(x, x_ref) <= 1e-12);
  }
  SUBCASE("static condensation scatters through the weighted P rows") {
    const auto [op, f_s] = static_condense(in);
    const std::vector<double> x_b = oracle::gauss_solve(to_dense(op.s_mat), f_s);
    const std::vector<double> x = recover_condensed(op, x_b, in.f_hat);
    CHECK(oracle::rel_inf_diff(x, x_ref) <= 1e-12);
  }
  SUBCASE("assembled path agrees") {
    const auto [a, f] = assemble(in);
    CHECK(oracle::rel_inf_diff(oracle::gauss_solve(to_dense(a), f), x_ref) <= 1e-12);
  }
}

TEST_CASE("input validation catches inconsistent C") {
  ReductionInputs in = fem_inputs(2, 0);
  validate_reduction_inputs(in);  // sane baseline
  // flip one constraint sign so C P != 0
  in.c_mat.values[0] = -1.0;
  CHECK_THROWS_AS(validate_reduction_inputs(in), ValidationError);
}
