#include "hdivred/verify.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "hdivred/dd.hpp"
#include "hdivred/errors.hpp"
#include "hdivred/reference.hpp"
#include "hdivred/solvers.hpp"

namespace hdivred {

namespace {

double max_abs_dense_diff(const CsrMatrix& a, const DenseMatrix& b) {
  double m = 0.0;
  const DenseMatrix ad = to_dense(a);
  for (std::size_t i = 0; i < ad.entries.size(); ++i) m = std::max(m, std::abs(ad.entries[i] - b.entries[i]));
  return m;
}

VerifyCheck make_check(const std::string& name, double err, double tol) {
  return {name, err, tol, err <= tol};
}

DdMatrix dd_from(const DenseMatrix& a) {
  DdMatrix d(a.nrows, a.ncols);
  for (std::size_t i = 0; i < a.entries.size(); ++i) d.entries[i] = a.entries[i];
  return d;
}

DdMatrix dd_solve_matrix(DdMatrix a, const DdMatrix& b) {
  std::vector<index_t> pivots;
  dd_lu_factor(a, pivots);
  DdMatrix x(b.nrows, b.ncols);
  std::vector<Dd> col(static_cast<std::size_t>(b.nrows));
  for (index_t j = 0; j < b.ncols; ++j) {
    for (index_t i = 0; i < b.nrows; ++i) col[static_cast<std::size_t>(i)] = b(i, j);
    const std::vector<Dd> sol = dd_lu_solve(a, pivots, col);
    for (index_t i = 0; i < b.nrows; ++i) x(i, j) = sol[static_cast<std::size_t>(i)];
  }
  return x;
}

}  // namespace

std::string instance_label(const VerifyInstance& inst) {
  std::ostringstream os;
  os << inst.cells_per_axis << "^3 k=" << inst.order << " p=" << inst.p
     << (inst.weighted ? " weighted" : " unweighted");
  return os.str();
}

VerifyCheck check_interface_schur_identity(const ReductionInputs& inputs, const CsrMatrix& h_mat, double tol) {
  const index_t m = inputs.c_mat.nrows;
  std::vector<index_t> masters, slaves;
  masters.reserve(static_cast<std::size_t>(m));
  slaves.reserve(static_cast<std::size_t>(m));
  for (index_t r = 0; r < m; ++r) {
    auto cols = inputs.c_mat.row_cols(r);
    auto vals = inputs.c_mat.row_vals(r);
    if (cols.size() != 2 || vals[0] != 1.0 || vals[1] != 1.0)
      throw ValidationError("interface Schur identity needs the unweighted two-copy constraint form");
    masters.push_back(cols[0]);  // lower-cell copy
    slaves.push_back(cols[1]);
  }

  // b block ordered (masters, slaves); i block = zero columns of C.
  const index_t n_hat = inputs.a_hat.broken_dim;
  std::vector<char> in_b(static_cast<std::size_t>(n_hat), 0);
  for (index_t r : masters) in_b[static_cast<std::size_t>(r)] = 1;
  for (index_t r : slaves) in_b[static_cast<std::size_t>(r)] = 1;
  std::vector<index_t> b_idx = masters;
  b_idx.insert(b_idx.end(), slaves.begin(), slaves.end());
  std::vector<index_t> i_idx;
  for (index_t r = 0; r < n_hat; ++r)
    if (!in_b[static_cast<std::size_t>(r)]) i_idx.push_back(r);

  const DenseMatrix a_hat = to_dense(inputs.a_hat);
  const index_t nb = static_cast<index_t>(b_idx.size());
  const index_t ni = static_cast<index_t>(i_idx.size());
  DdMatrix a_bb(nb, nb), a_bi(nb, ni), a_ib(ni, nb), a_ii(ni, ni);
  for (index_t i = 0; i < nb; ++i)
    for (index_t j = 0; j < nb; ++j) a_bb(i, j) = a_hat(b_idx[static_cast<std::size_t>(i)], b_idx[static_cast<std::size_t>(j)]);
  for (index_t i = 0; i < nb; ++i)
    for (index_t j = 0; j < ni; ++j) a_bi(i, j) = a_hat(b_idx[static_cast<std::size_t>(i)], i_idx[static_cast<std::size_t>(j)]);
  for (index_t i = 0; i < ni; ++i)
    for (index_t j = 0; j < nb; ++j) a_ib(i, j) = a_hat(i_idx[static_cast<std::size_t>(i)], b_idx[static_cast<std::size_t>(j)]);
  for (index_t i = 0; i < ni; ++i)
    for (index_t j = 0; j < ni; ++j) a_ii(i, j) = a_hat(i_idx[static_cast<std::size_t>(i)], i_idx[static_cast<std::size_t>(j)]);

  DdMatrix schur = a_bb;
  if (ni > 0) {
    const DdMatrix aii_inv_aib = dd_solve_matrix(a_ii, a_ib);
    for (index_t i = 0; i < nb; ++i)
      for (index_t j = 0; j < nb; ++j) {
        Dd v = schur(i, j);
        for (index_t k = 0; k < ni; ++k) v -= a_bi(i, k) * aii_inv_aib(k, j);
        schur(i, j) = v;
      }
  }
  DdMatrix ident(nb, nb);
  for (index_t i = 0; i < nb; ++i) ident(i, i) = 1.0;
  const DdMatrix sinv = dd_solve_matrix(schur, ident);

  // H = [-W, I] S^-1 [-W, I]^T with W = -I pairs the two copies of each row.
  DenseMatrix h_ref(m, m);
  for (index_t r = 0; r < m; ++r)
    for (index_t c = 0; c < m; ++c)
      h_ref(r, c) = (sinv(r, c) + sinv(r, m + c) + sinv(m + r, c) + sinv(m + r, m + c)).value();

  const double scale = std::max(dense_max_abs(h_ref), 1e-300);
  return make_check("interface_schur_identity", max_abs_dense_diff(h_mat, h_ref) / scale, tol);
}

namespace {

// Multiplier Schur complement of the dense three-field saddle matrix, in Dd.
DenseMatrix three_field_schur(const RtSpace& space, const CellCoefficients& coeffs,
                              const ReductionInputs& inputs) {
  const index_t n_hat = inputs.a_hat.broken_dim;
  const index_t np = space.mesh.ncells() * space.pressure_dofs_per_cell;
  const index_t m = inputs.c_mat.nrows;
  DdMatrix t(n_hat + np, n_hat + np);
  for (index_t cell = 0; cell < space.mesh.ncells(); ++cell) {
    const ElementMatrices em = element_matrices(space, cell, coeffs);
    const index_t off = cell * space.element_ndofs;
    const index_t poff = n_hat + cell * space.pressure_dofs_per_cell;
    for (index_t i = 0; i < space.element_ndofs; ++i)
      for (index_t j = 0; j < space.element_ndofs; ++j) t(off + i, off + j) = em.m_mat(i, j);
    for (index_t r = 0; r < space.pressure_dofs_per_cell; ++r) {
      for (index_t j = 0; j < space.element_ndofs; ++j) {
        t(poff + r, off + j) = em.b_mat(r, j);
        t(off + j, poff + r) = em.b_mat(r, j);
      }
      for (index_t s = 0; s < space.pressure_dofs_per_cell; ++s) t(poff + r, poff + s) = -em.w_mat(r, s);
    }
  }

  DdMatrix rhs(n_hat + np, m);
  for (index_t r = 0; r < m; ++r) {
    auto cols = inputs.c_mat.row_cols(r);
    auto vals = inputs.c_mat.row_vals(r);
    for (std::size_t k = 0; k < cols.size(); ++k) rhs(cols[k], r) = vals[k];
  }
  const DdMatrix x = dd_solve_matrix(std::move(t), rhs);
  DenseMatrix h_ref(m, m);
  for (index_t r = 0; r < m; ++r) {
    auto cols = inputs.c_mat.row_cols(r);
    auto vals = inputs.c_mat.row_vals(r);
    for (index_t c = 0; c < m; ++c) {
      Dd s;
      for (std::size_t k = 0; k < cols.size(); ++k) s += Dd(vals[k]) * x(cols[k], c);
      h_ref(r, c) = s.value();
    }
  }
  return h_ref;
}

}  // namespace

VerifyCheck check_three_field_identity(const RtSpace& space, const CellCoefficients& coeffs,
                                       const ReductionInputs& inputs, const CsrMatrix& h_mat, double tol) {
  const DenseMatrix h_ref = three_field_schur(space, coeffs, inputs);
  const double scale = std::max(dense_max_abs(h_ref), 1e-300);
  return make_check("three_field_identity", max_abs_dense_diff(h_mat, h_ref) / scale, tol);
}

VerifyCheck check_three_field_identity_composed(const RtSpace& space, const CellCoefficients& coeffs,
                                                const ReductionInputs& inputs, double tol) {
  const DenseMatrix h_tilde = three_field_schur(space, coeffs, inputs);

  // H = C A^-1 C^T with A composed per element as B^T W^-1 B + M, so both
  // sides derive from the identical (M, B, W, C) data.
  const index_t n_hat = inputs.a_hat.broken_dim;
  const index_t m = inputs.c_mat.nrows;
  DdMatrix a_hat(n_hat, n_hat);
  for (index_t cell = 0; cell < space.mesh.ncells(); ++cell) {
    const ElementMatrices em = element_matrices(space, cell, coeffs);
    const index_t off = cell * space.element_ndofs;
    const index_t nel = space.element_ndofs;
    const index_t npr = space.pressure_dofs_per_cell;
    DdMatrix w(npr, npr), b(npr, nel);
    for (index_t r = 0; r < npr; ++r) {
      for (index_t s2 = 0; s2 < npr; ++s2) w(r, s2) = em.w_mat(r, s2);
      for (index_t j = 0; j < nel; ++j) b(r, j) = em.b_mat(r, j);
    }
    const DdMatrix winv_b = dd_solve_matrix(std::move(w), b);
    for (index_t i = 0; i < nel; ++i)
      for (index_t j = 0; j < nel; ++j) {
        Dd s = em.m_mat(i, j);
        for (index_t r = 0; r < npr; ++r) s += Dd(em.b_mat(r, i)) * winv_b(r, j);
        a_hat(off + i, off + j) = s;
      }
  }
  const DdMatrix ct = dd_from(to_dense(transpose(inputs.c_mat)));
  const DdMatrix ainv_ct = dd_solve_matrix(std::move(a_hat), ct);
  DenseMatrix h(m, m);
  for (index_t r = 0; r < m; ++r) {
    auto cols = inputs.c_mat.row_cols(r);
    auto vals = inputs.c_mat.row_vals(r);
    for (index_t c = 0; c < m; ++c) {
      Dd s;
      for (std::size_t k = 0; k < cols.size(); ++k) s += Dd(vals[k]) * ainv_ct(cols[k], c);
      h(r, c) = s.value();
    }
  }
  double diff = 0.0;
  for (std::size_t i = 0; i < h.entries.size(); ++i)
    diff = std::max(diff, std::abs(h.entries[i] - h_tilde.entries[i]));
  const double scale = std::max(dense_max_abs(h_tilde), 1e-300);
  return make_check("three_field_identity", diff / scale, tol);
}

std::vector<VerifyCheck> verify_instance(const VerifyInstance& inst) {
  const index_t c = inst.cells_per_axis;
  const double h = 1.0 / static_cast<double>(c);
  const CartesianMesh mesh = build_mesh(3, {c, c, c}, {h, h, h});
  const RtSpace space = build_space(mesh, inst.order);
  const CellCoefficients coeffs = soft_hard_coefficients(mesh, inst.p);
  const ReductionInputs inputs = build_reduction_inputs(space, coeffs, inst.weighted);

  std::vector<VerifyCheck> checks;

  // C P = 0
  {
    const CsrMatrix cp = triple_product(inputs.c_mat, CsrMatrix::identity(inputs.n_hat()), inputs.p_mat);
    const double scale = std::max(1.0, max_abs(inputs.c_mat) * max_abs(inputs.p_mat));
    checks.push_back(make_check("cp_zero", max_abs(cp) / scale, 1e-13));
  }

  const ReferencePaths ref = reference_paths(inputs);
  const CsrMatrix h_ref_csr = from_dense(ref.h_dense);

  // element-wise H formation against the one-shot dense inverse C A_hat^-1 C^T
  {
    const DdMatrix a_hat = dd_from(to_dense(inputs.a_hat));
    const DdMatrix ct = dd_from(to_dense(transpose(inputs.c_mat)));
    const DdMatrix ainv_ct = dd_solve_matrix(a_hat, ct);
    const index_t m = inputs.c_mat.nrows;
    DenseMatrix h_oneshot(m, m);
    for (index_t r = 0; r < m; ++r) {
      auto cols = inputs.c_mat.row_cols(r);
      auto vals = inputs.c_mat.row_vals(r);
      for (index_t c = 0; c < m; ++c) {
        Dd s;
        for (std::size_t k = 0; k < cols.size(); ++k) s += Dd(vals[k]) * ainv_ct(cols[k], c);
        h_oneshot(r, c) = s.value();
      }
    }
    const double scale = std::max(dense_max_abs(h_oneshot), 1e-300);
    checks.push_back(make_check("h_dense_oracle", max_abs_dense_diff(h_ref_csr, h_oneshot) / scale, 1e-11));
  }

  // hybridized/assembled equivalence: x_hat = P x, via the reference solves
  checks.push_back(make_check("equivalence", ref.equivalence_error, 1e-9));

  // the saddle solution satisfies both block equations
  checks.push_back(make_check("saddle_residuals",
                              std::max(ref.constraint_residual, ref.primal_residual), 1e-10));

  // Interface Schur identity runs on the unweighted constraint form.
  {
    if (inst.weighted) {
      const ReductionInputs unweighted = build_reduction_inputs(space, coeffs, false);
      const ReferencePaths ref_u = reference_paths(unweighted);
      checks.push_back(check_interface_schur_identity(unweighted, from_dense(ref_u.h_dense)));
    } else {
      checks.push_back(check_interface_schur_identity(inputs, h_ref_csr));
    }
  }

  checks.push_back(check_three_field_identity_composed(space, coeffs, inputs));

  // Energy identity x^T A x = x_hat^T A_hat x_hat with x_hat = P x
  checks.push_back(make_check("energy_identity", ref.energy_error, 1e-12));

  // Static condensation path reaches the same solution
  checks.push_back(make_check("master_agreement", ref.master_error, 1e-9));

  // Near-nullspace of C Y C^T has dimension <= 1
  {
    const std::vector<double> evs = near_nullspace_check(space, coeffs, inst.weighted);
    index_t low = 0;
    if (!evs.empty()) {
      const double cutoff = 1e-10 * evs.back();
      for (double ev : evs)
        if (ev < cutoff) ++low;
    }
    checks.push_back(make_check("near_nullspace_dim", static_cast<double>(low), 1.0));
  }

  return checks;
}

bool run_verify(VerifyLevel level, std::ostream& report) {
  std::vector<VerifyInstance> instances;
  instances.push_back({2, 0, 0, false});
  if (level == VerifyLevel::full) {
    const std::pair<index_t, int> shapes[] = {{2, 0}, {3, 0}, {2, 1}};
    for (const auto& [cells, order] : shapes)
      for (bool weighted : {false, true})
        for (int p : {-8, 0, 8}) {
          if (cells == 2 && order == 0 && p == 0 && !weighted) continue;  // fast instance
          instances.push_back({cells, order, p, weighted});
        }
  }

  bool all_pass = true;
  for (const VerifyInstance& inst : instances) {
    const std::vector<VerifyCheck> checks = verify_instance(inst);
    for (const VerifyCheck& chk : checks) {
      all_pass = all_pass && chk.pass;
      report << (chk.pass ? "PASS " : "FAIL ") << chk.name << " [" << instance_label(inst) << "] max_error="
             << chk.max_error << " tol=" << chk.tolerance << "\n";
    }
  }
  report << (all_pass ? "verify: all checks passed\n" : "verify: FAILURES detected\n");
  return all_pass;
}

}  // namespace hdivred
