#include "hdivred/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hdivred/errors.hpp"
#include "hdivred/parallel.hpp"

namespace hdivred {

namespace {

std::vector<index_t> block_offsets(const ElementBlockOperator& op) {
  std::vector<index_t> off(op.blocks.size() + 1, 0);
  for (std::size_t b = 0; b < op.blocks.size(); ++b)
    off[b + 1] = off[b] + static_cast<index_t>(op.blocks[b].dof_map.size());
  return off;
}

DenseMatrix submatrix(const DenseMatrix& a, const std::vector<index_t>& rows, const std::vector<index_t>& cols) {
  DenseMatrix s(static_cast<index_t>(rows.size()), static_cast<index_t>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) s(static_cast<index_t>(i), static_cast<index_t>(j)) = a(rows[i], cols[j]);
  return s;
}

// Multiplier rows touching a broken index range, plus the dense constraint
// slice over the given local columns. ct is transpose(C): broken -> rows.
void constraint_slice(const CsrMatrix& c_mat, const CsrMatrix& ct, index_t off, index_t nel,
                      const std::vector<index_t>& local_cols, std::vector<index_t>& rows_out,
                      DenseMatrix& slice_out) {
  rows_out.clear();
  for (index_t l = 0; l < nel; ++l) {
    for (index_t row : ct.row_cols(off + l)) rows_out.push_back(row);
  }
  std::sort(rows_out.begin(), rows_out.end());
  rows_out.erase(std::unique(rows_out.begin(), rows_out.end()), rows_out.end());

  slice_out = DenseMatrix(static_cast<index_t>(rows_out.size()), static_cast<index_t>(local_cols.size()));
  for (std::size_t r = 0; r < rows_out.size(); ++r) {
    auto cols = c_mat.row_cols(rows_out[r]);
    auto vals = c_mat.row_vals(rows_out[r]);
    for (std::size_t j = 0; j < local_cols.size(); ++j) {
      const index_t target = off + local_cols[j];
      // rows of C are short; linear scan over the sorted row
      for (std::size_t k = 0; k < cols.size(); ++k) {
        if (cols[k] == target) {
          slice_out(static_cast<index_t>(r), static_cast<index_t>(j)) = vals[k];
          break;
        }
        if (cols[k] > target) break;
      }
    }
  }
}

std::vector<double> gather(const std::vector<double>& v, index_t off, const std::vector<index_t>& idx) {
  std::vector<double> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[static_cast<std::size_t>(off + idx[i])];
  return out;
}

void symmetrize(DenseMatrix& a) {
  for (index_t i = 0; i < a.nrows; ++i)
    for (index_t j = i + 1; j < a.ncols; ++j) {
      const double v = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = v;
      a(j, i) = v;
    }
}

// Column-by-column refined solve; the raw matrix rides along for residuals.
DenseMatrix solve_matrix_refined(const DenseMatrix& a, const LuFactors& f, const DenseMatrix& b) {
  DenseMatrix x(b.nrows, b.ncols);
  std::vector<double> col(static_cast<std::size_t>(b.nrows));
  for (index_t j = 0; j < b.ncols; ++j) {
    for (index_t i = 0; i < b.nrows; ++i) col[static_cast<std::size_t>(i)] = b(i, j);
    const std::vector<double> sol = lu_solve_refined(a, f, col);
    for (index_t i = 0; i < b.nrows; ++i) x(i, j) = sol[static_cast<std::size_t>(i)];
  }
  return x;
}

// Multiplier numbering: interior faces in ascending face order, dofs_per_face
// rows each; -1 for boundary faces.
std::vector<index_t> multiplier_base(const RtSpace& space) {
  std::vector<index_t> base(static_cast<std::size_t>(space.mesh.nfaces()), -1);
  index_t next = 0;
  for (index_t f = 0; f < space.mesh.nfaces(); ++f) {
    if (!space.mesh.face(f).is_boundary) {
      base[static_cast<std::size_t>(f)] = next;
      next += space.dofs_per_face;
    }
  }
  return base;
}

}  // namespace

void validate_reduction_inputs(const ReductionInputs& inputs, double tol) {
  inputs.a_hat.validate();
  inputs.p_mat.validate();
  inputs.c_mat.validate();
  const index_t n_hat = inputs.a_hat.broken_dim;
  if (inputs.p_mat.nrows != n_hat)
    throw ValidationError("P has " + std::to_string(inputs.p_mat.nrows) + " rows, broken dim is " + std::to_string(n_hat));
  if (inputs.c_mat.ncols != n_hat)
    throw ValidationError("C has " + std::to_string(inputs.c_mat.ncols) + " cols, broken dim is " + std::to_string(n_hat));
  if (static_cast<index_t>(inputs.f_hat.size()) != n_hat)
    throw ValidationError("f_hat length " + std::to_string(inputs.f_hat.size()) + ", broken dim is " + std::to_string(n_hat));
  if (inputs.c_mat.nrows != n_hat - inputs.p_mat.ncols)
    throw ValidationError("m = " + std::to_string(inputs.c_mat.nrows) + " but n_hat - n = " +
                          std::to_string(n_hat - inputs.p_mat.ncols));

  const CsrMatrix cp = triple_product(inputs.c_mat, CsrMatrix::identity(n_hat), inputs.p_mat);
  double worst = 0.0;
  index_t wr = 0, wc = 0;
  for (index_t i = 0; i < cp.nrows; ++i) {
    auto cols = cp.row_cols(i);
    auto vals = cp.row_vals(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (std::abs(vals[k]) > worst) {
        worst = std::abs(vals[k]);
        wr = i;
        wc = cols[k];
      }
    }
  }
  if (worst > tol * std::max(1.0, max_abs(inputs.c_mat) * max_abs(inputs.p_mat)))
    throw ValidationError("C*P != 0: max |CP[" + std::to_string(wr) + "," + std::to_string(wc) + "]| = " +
                          std::to_string(worst));
}

CsrMatrix build_P(const RtSpace& space) {
  CsrMatrix p(space.broken_ndofs, space.ndofs);
  p.col_indices.reserve(static_cast<std::size_t>(space.broken_ndofs));
  p.values.reserve(static_cast<std::size_t>(space.broken_ndofs));
  index_t row = 0;
  for (index_t cell = 0; cell < space.mesh.ncells(); ++cell) {
    for (const SignedDof& d : local_dof_map(space, cell)) {
      p.col_indices.push_back(d.global);
      p.values.push_back(d.sign);
      p.row_offsets[static_cast<std::size_t>(row) + 1] = row + 1;
      ++row;
    }
  }
  return p;
}

CsrMatrix build_C(const RtSpace& space, bool weighted) {
  const index_t dpf = space.dofs_per_face;
  const auto base = multiplier_base(space);
  const index_t m = space.broken_ndofs - space.ndofs;

  std::vector<index_t> rows, cols;
  std::vector<double> vals;
  for (index_t f = 0; f < space.mesh.nfaces(); ++f) {
    const Face face = space.mesh.face(f);
    if (face.is_boundary) continue;
    const index_t mb = base[static_cast<std::size_t>(f)];
    const index_t cm = *face.minus_cell;
    const index_t cp = *face.plus_cell;
    const int slot_minus = 2 * face.axis + 1;  // +axis face of the lower cell
    const int slot_plus = 2 * face.axis;       // -axis face of the upper cell
    const index_t lm = space.interior_dofs_per_cell + slot_minus * dpf;
    const index_t lp = space.interior_dofs_per_cell + slot_plus * dpf;
    const index_t off_m = cm * space.element_ndofs;
    const index_t off_p = cp * space.element_ndofs;

    if (!weighted) {
      // element-outward copies: continuity is x_minus + x_plus = 0
      for (index_t sub = 0; sub < dpf; ++sub) {
        rows.push_back(mb + sub);
        cols.push_back(off_m + lm + sub);
        vals.push_back(1.0);
        rows.push_back(mb + sub);
        cols.push_back(off_p + lp + sub);
        vals.push_back(1.0);
      }
    } else {
      const DenseMatrix& fm_minus = space.ref_face_moments[static_cast<std::size_t>(slot_minus)];
      const DenseMatrix& fm_plus = space.ref_face_moments[static_cast<std::size_t>(slot_plus)];
      for (index_t r = 0; r < dpf; ++r) {
        for (index_t sub = 0; sub < dpf; ++sub) {
          rows.push_back(mb + r);
          cols.push_back(off_m + lm + sub);
          vals.push_back(fm_minus(r, lm + sub));
          rows.push_back(mb + r);
          cols.push_back(off_p + lp + sub);
          vals.push_back(fm_plus(r, lp + sub));
        }
      }
    }
  }
  return CsrMatrix::from_triplets(m, space.broken_ndofs, rows, cols, vals);
}

ReductionInputs build_reduction_inputs(const RtSpace& space, const CellCoefficients& coeffs, bool weighted,
                                       const std::array<double, 3>& g) {
  ReductionInputs in;
  in.a_hat.blocks.resize(static_cast<std::size_t>(space.mesh.ncells()));
  in.a_hat.broken_dim = space.broken_ndofs;
  in.a_hat.global_dim = space.ndofs;
  in.f_hat.resize(static_cast<std::size_t>(space.broken_ndofs));

  parallel_for(space.mesh.ncells(), [&](index_t cell) {
    ElementMatrices em = element_matrices(space, cell, coeffs, g);
    auto& blk = in.a_hat.blocks[static_cast<std::size_t>(cell)];
    blk.dof_map = local_dof_map(space, cell);
    blk.matrix = std::move(em.a_mat);
    const index_t off = cell * space.element_ndofs;
    for (std::size_t l = 0; l < em.load.size(); ++l)
      in.f_hat[static_cast<std::size_t>(off) + l] = em.load[l];
  });

  in.p_mat = build_P(space);
  in.c_mat = build_C(space, weighted);
  in.interior_global_begin = space.face_dof_count;
  return in;
}

std::pair<CsrMatrix, std::vector<double>> assemble(const ReductionInputs& inputs) {
  if (inputs.p_mat.nrows != inputs.a_hat.broken_dim)
    throw DimensionMismatch("assemble: P rows != broken dim");
  const CsrMatrix pt = transpose(inputs.p_mat);
  CsrMatrix a = triple_product(pt, inputs.a_hat, inputs.p_mat);
  std::vector<double> f = spmv(pt, inputs.f_hat);
  return {std::move(a), std::move(f)};
}

namespace {

// Partition local dofs of one block into interior/interface.
void partition_block(const ElementBlockOperator::Block& blk, index_t off, index_t marker,
                     const std::vector<char>& col_used, std::vector<index_t>& i_local,
                     std::vector<index_t>& b_local) {
  i_local.clear();
  b_local.clear();
  const index_t nel = static_cast<index_t>(blk.dof_map.size());
  for (index_t l = 0; l < nel; ++l) {
    bool interface;
    if (marker >= 0) {
      interface = blk.dof_map[static_cast<std::size_t>(l)].global < marker;
    } else {
      interface = col_used[static_cast<std::size_t>(off + l)] != 0;
    }
    (interface ? b_local : i_local).push_back(l);
  }
}

std::vector<char> constrained_columns(const CsrMatrix& ct) {
  std::vector<char> used(static_cast<std::size_t>(ct.nrows), 0);
  for (index_t i = 0; i < ct.nrows; ++i)
    if (!ct.row_cols(i).empty()) used[static_cast<std::size_t>(i)] = 1;
  return used;
}

}  // namespace

std::pair<HybridizedOperator, std::vector<double>> hybridize(const ReductionInputs& inputs) {
  const index_t n_hat = inputs.a_hat.broken_dim;
  if (inputs.c_mat.ncols != n_hat || inputs.p_mat.nrows != n_hat ||
      static_cast<index_t>(inputs.f_hat.size()) != n_hat)
    throw DimensionMismatch("hybridize: inconsistent input dimensions");

  HybridizedOperator op;
  op.block_offsets = block_offsets(inputs.a_hat);
  op.p_mat = inputs.p_mat;
  op.elements.resize(inputs.a_hat.blocks.size());

  const CsrMatrix ct = transpose(inputs.c_mat);
  const std::vector<char> col_used = constrained_columns(ct);
  const index_t m = inputs.c_mat.nrows;

  // Interior dofs are detected algebraically from the zero columns of C so
  // the FE and imported-file paths share one code path.
  parallel_for(static_cast<index_t>(inputs.a_hat.blocks.size()), [&](index_t e) {
    const auto& blk = inputs.a_hat.blocks[static_cast<std::size_t>(e)];
    auto& el = op.elements[static_cast<std::size_t>(e)];
    const index_t off = op.block_offsets[static_cast<std::size_t>(e)];
    partition_block(blk, off, -1, col_used, el.i_local, el.b_local);

    const DenseMatrix a_bb = submatrix(blk.matrix, el.b_local, el.b_local);
    el.a_ib = submatrix(blk.matrix, el.i_local, el.b_local);
    el.a_bi = submatrix(blk.matrix, el.b_local, el.i_local);
    el.a_ii_mat = submatrix(blk.matrix, el.i_local, el.i_local);
    el.a_ii = lu_factor(el.a_ii_mat);

    DenseMatrix schur = a_bb;
    if (!el.i_local.empty() && !el.b_local.empty()) {
      const DenseMatrix aii_inv_aib = solve_matrix_refined(el.a_ii_mat, el.a_ii, el.a_ib);
      schur = dense_add(a_bb, dense_multiply(el.a_bi, aii_inv_aib), -1.0);
      symmetrize(schur);  // exact Schur complement of an SPD block is symmetric
    }
    el.s_b_mat = schur;
    el.s_b = lu_factor(schur);

    constraint_slice(inputs.c_mat, ct, off, static_cast<index_t>(blk.dof_map.size()), el.b_local,
                     el.multiplier_rows, el.c_b);
  });

  // Fixed-order accumulation of H and g, independent of the thread count.
  std::vector<index_t> rows, cols;
  std::vector<double> vals;
  std::vector<double> g(static_cast<std::size_t>(m), 0.0);
  for (std::size_t e = 0; e < op.elements.size(); ++e) {
    auto& el = op.elements[e];
    const index_t off = op.block_offsets[e];
    const index_t nr = static_cast<index_t>(el.multiplier_rows.size());
    if (nr > 0) {
      // H_e = C_b S_b^-1 C_b^T
      const DenseMatrix sinv_cbt = solve_matrix_refined(el.s_b_mat, el.s_b, dense_transpose(el.c_b));
      DenseMatrix h_e = dense_multiply(el.c_b, sinv_cbt);
      symmetrize(h_e);
      for (index_t r = 0; r < nr; ++r)
        for (index_t c = 0; c < nr; ++c) {
          rows.push_back(el.multiplier_rows[static_cast<std::size_t>(r)]);
          cols.push_back(el.multiplier_rows[static_cast<std::size_t>(c)]);
          vals.push_back(h_e(r, c));
        }
    }
    // g = C A_hat^-1 f_hat, element-wise through the same factorizations
    const std::vector<double> f_i = gather(inputs.f_hat, off, el.i_local);
    const std::vector<double> f_b = gather(inputs.f_hat, off, el.b_local);
    const std::vector<double> xi0 = lu_solve_refined(el.a_ii_mat, el.a_ii, f_i);
    std::vector<double> rhs_b = f_b;
    {
      const std::vector<double> corr = dense_apply(el.a_bi, xi0);
      for (std::size_t i = 0; i < rhs_b.size(); ++i) rhs_b[i] -= corr[i];
    }
    const std::vector<double> xb = lu_solve_refined(el.s_b_mat, el.s_b, rhs_b);
    const std::vector<double> ge = dense_apply(el.c_b, xb);
    for (index_t r = 0; r < nr; ++r) g[static_cast<std::size_t>(el.multiplier_rows[static_cast<std::size_t>(r)])] += ge[static_cast<std::size_t>(r)];
  }
  op.h_mat = CsrMatrix::from_triplets(m, m, rows, cols, vals);

  // diag(P^T P); the Gram matrix is diagonal exactly when every broken row
  // holds a single entry (the signed-injection P of conforming spaces)
  op.recovery_scale.assign(static_cast<std::size_t>(inputs.p_mat.ncols), 0.0);
  for (index_t r = 0; r < inputs.p_mat.nrows; ++r) {
    auto cols = inputs.p_mat.row_cols(r);
    auto vals = inputs.p_mat.row_vals(r);
    if (cols.size() > 1) op.diagonal_gram = false;
    for (std::size_t k = 0; k < cols.size(); ++k)
      op.recovery_scale[static_cast<std::size_t>(cols[k])] += vals[k] * vals[k];
  }
  for (double& s : op.recovery_scale) {
    if (s == 0.0) throw ValidationError("hybridize: P has an empty column (not full column rank)");
    s = 1.0 / s;
  }
  return {std::move(op), std::move(g)};
}

std::pair<std::vector<double>, std::vector<double>> recover_hybrid(const HybridizedOperator& op,
                                                                   const std::vector<double>& lambda,
                                                                   const std::vector<double>& f_hat) {
  const index_t n_hat = op.block_offsets.back();
  if (static_cast<index_t>(f_hat.size()) != n_hat) throw DimensionMismatch("recover_hybrid: f_hat length");
  if (static_cast<index_t>(lambda.size()) != op.h_mat.nrows)
    throw DimensionMismatch("recover_hybrid: lambda length");

  std::vector<double> x_hat(static_cast<std::size_t>(n_hat), 0.0);
  for (std::size_t e = 0; e < op.elements.size(); ++e) {
    const auto& el = op.elements[e];
    const index_t off = op.block_offsets[e];
    std::vector<double> rhs_b = gather(f_hat, off, el.b_local);
    // C^T lambda touches only the interface dofs
    for (std::size_t r = 0; r < el.multiplier_rows.size(); ++r) {
      const double lr = lambda[static_cast<std::size_t>(el.multiplier_rows[r])];
      if (lr == 0.0) continue;
      for (std::size_t j = 0; j < rhs_b.size(); ++j) rhs_b[j] -= el.c_b(static_cast<index_t>(r), static_cast<index_t>(j)) * lr;
    }
    const std::vector<double> f_i = gather(f_hat, off, el.i_local);
    const std::vector<double> xi0 = lu_solve_refined(el.a_ii_mat, el.a_ii, f_i);
    {
      const std::vector<double> corr = dense_apply(el.a_bi, xi0);
      for (std::size_t j = 0; j < rhs_b.size(); ++j) rhs_b[j] -= corr[j];
    }
    const std::vector<double> xb = lu_solve_refined(el.s_b_mat, el.s_b, rhs_b);
    std::vector<double> xi = xi0;
    if (!el.i_local.empty() && !el.b_local.empty()) {
      const std::vector<double> corr = dense_apply(el.a_ib, xb);
      const std::vector<double> fix = lu_solve_refined(el.a_ii_mat, el.a_ii, corr);
      for (std::size_t i = 0; i < xi.size(); ++i) xi[i] -= fix[i];
    }
    for (std::size_t i = 0; i < el.i_local.size(); ++i)
      x_hat[static_cast<std::size_t>(off + el.i_local[i])] = xi[i];
    for (std::size_t j = 0; j < el.b_local.size(); ++j)
      x_hat[static_cast<std::size_t>(off + el.b_local[j])] = xb[j];
  }

  // x = (P^T P)^-1 P^T x_hat: signed averaging for injection P, a Gram
  // solve when a general mapping duplicates dofs with weights
  std::vector<double> x(static_cast<std::size_t>(op.p_mat.ncols), 0.0);
  for (index_t r = 0; r < op.p_mat.nrows; ++r) {
    auto cols = op.p_mat.row_cols(r);
    auto vals = op.p_mat.row_vals(r);
    for (std::size_t k = 0; k < cols.size(); ++k)
      x[static_cast<std::size_t>(cols[k])] += vals[k] * x_hat[static_cast<std::size_t>(r)];
  }
  if (op.diagonal_gram) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] *= op.recovery_scale[i];
  } else {
    // CG on the SPD Gram matrix, applied matrix-free as P^T (P z)
    const std::vector<double>& rhs = x;
    std::vector<double> z(x.size(), 0.0), res = rhs, dir;
    std::vector<double> prec(res.size());
    for (std::size_t i = 0; i < res.size(); ++i) prec[i] = op.recovery_scale[i] * res[i];
    dir = prec;
    double rz = 0.0;
    for (std::size_t i = 0; i < res.size(); ++i) rz += res[i] * prec[i];
    double rhs_norm = 0.0;
    for (double v : rhs) rhs_norm += v * v;
    for (int it = 0; it < 200 && rz > 0.0; ++it) {
      const std::vector<double> pd = spmv(op.p_mat, dir);
      std::vector<double> q(x.size(), 0.0);
      for (index_t r = 0; r < op.p_mat.nrows; ++r) {
        auto cols = op.p_mat.row_cols(r);
        auto vals = op.p_mat.row_vals(r);
        for (std::size_t k = 0; k < cols.size(); ++k)
          q[static_cast<std::size_t>(cols[k])] += vals[k] * pd[static_cast<std::size_t>(r)];
      }
      double dq = 0.0;
      for (std::size_t i = 0; i < dir.size(); ++i) dq += dir[i] * q[i];
      if (dq <= 0.0) break;
      const double alpha = rz / dq;
      double res_norm = 0.0;
      for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] += alpha * dir[i];
        res[i] -= alpha * q[i];
        res_norm += res[i] * res[i];
      }
      if (res_norm <= 1e-28 * rhs_norm) break;
      for (std::size_t i = 0; i < res.size(); ++i) prec[i] = op.recovery_scale[i] * res[i];
      double rz_new = 0.0;
      for (std::size_t i = 0; i < res.size(); ++i) rz_new += res[i] * prec[i];
      const double beta = rz_new / rz;
      for (std::size_t i = 0; i < dir.size(); ++i) dir[i] = prec[i] + beta * dir[i];
      rz = rz_new;
    }
    x = z;
  }
  return {std::move(x_hat), std::move(x)};
}

std::pair<CondensedOperator, std::vector<double>> static_condense(const ReductionInputs& inputs) {
  const index_t n_hat = inputs.a_hat.broken_dim;
  if (inputs.c_mat.ncols != n_hat || inputs.p_mat.nrows != n_hat ||
      static_cast<index_t>(inputs.f_hat.size()) != n_hat)
    throw DimensionMismatch("static_condense: inconsistent input dimensions");

  CondensedOperator op;
  op.block_offsets = block_offsets(inputs.a_hat);
  op.n_global = inputs.p_mat.ncols;
  op.elements.resize(inputs.a_hat.blocks.size());

  const CsrMatrix ct = transpose(inputs.c_mat);
  const std::vector<char> col_used = constrained_columns(ct);
  const index_t marker = inputs.interior_global_begin;

  struct Partial {
    DenseMatrix schur;
    std::vector<double> f_s;
  };
  std::vector<Partial> partial(op.elements.size());

  parallel_for(static_cast<index_t>(inputs.a_hat.blocks.size()), [&](index_t e) {
    const auto& blk = inputs.a_hat.blocks[static_cast<std::size_t>(e)];
    auto& el = op.elements[static_cast<std::size_t>(e)];
    auto& pt = partial[static_cast<std::size_t>(e)];
    const index_t off = op.block_offsets[static_cast<std::size_t>(e)];
    partition_block(blk, off, marker, col_used, el.i_local, el.b_local);

    const DenseMatrix a_bb = submatrix(blk.matrix, el.b_local, el.b_local);
    el.a_ib = submatrix(blk.matrix, el.i_local, el.b_local);
    const DenseMatrix a_bi = submatrix(blk.matrix, el.b_local, el.i_local);
    el.a_ii_mat = submatrix(blk.matrix, el.i_local, el.i_local);
    el.a_ii = lu_factor(el.a_ii_mat);

    pt.schur = a_bb;
    const std::vector<double> f_i = gather(inputs.f_hat, off, el.i_local);
    std::vector<double> f_s = gather(inputs.f_hat, off, el.b_local);
    if (!el.i_local.empty()) {
      if (!el.b_local.empty()) {
        const DenseMatrix aii_inv_aib = solve_matrix_refined(el.a_ii_mat, el.a_ii, el.a_ib);
        pt.schur = dense_add(a_bb, dense_multiply(a_bi, aii_inv_aib), -1.0);
        symmetrize(pt.schur);
      }
      const std::vector<double> corr = dense_apply(a_bi, lu_solve_refined(el.a_ii_mat, el.a_ii, f_i));
      for (std::size_t j = 0; j < f_s.size(); ++j) f_s[j] -= corr[j];
    }
    pt.f_s = std::move(f_s);

    // interior rows must map one-to-one onto globals for back substitution
    el.i_global.resize(el.i_local.size());
    for (std::size_t i = 0; i < el.i_local.size(); ++i) {
      const index_t row = off + el.i_local[i];
      auto cols = inputs.p_mat.row_cols(row);
      auto vals = inputs.p_mat.row_vals(row);
      if (cols.size() != 1 || vals[0] == 0.0)
        throw ValidationError("static_condense: interior broken dof " + std::to_string(row) +
                              " does not map to a single global dof");
      el.i_global[i] = {cols[0], vals[0]};
    }
  });

  // Master dofs = global dofs reached by any interface row of P.
  std::vector<char> is_master(static_cast<std::size_t>(op.n_global), 0);
  for (std::size_t e = 0; e < op.elements.size(); ++e) {
    const index_t off = op.block_offsets[e];
    for (index_t l : op.elements[e].b_local)
      for (index_t g : inputs.p_mat.row_cols(off + l)) is_master[static_cast<std::size_t>(g)] = 1;
  }
  op.master_globals.clear();
  for (index_t gdof = 0; gdof < op.n_global; ++gdof)
    if (is_master[static_cast<std::size_t>(gdof)]) op.master_globals.push_back(gdof);
  std::vector<index_t> ordinal(static_cast<std::size_t>(op.n_global), -1);
  for (std::size_t o = 0; o < op.master_globals.size(); ++o)
    ordinal[static_cast<std::size_t>(op.master_globals[o])] = static_cast<index_t>(o);

  const index_t n_master = static_cast<index_t>(op.master_globals.size());
  std::vector<index_t> rows, cols;
  std::vector<double> vals;
  std::vector<double> f_s(static_cast<std::size_t>(n_master), 0.0);
  for (std::size_t e = 0; e < op.elements.size(); ++e) {
    auto& el = op.elements[e];
    auto& pt = partial[e];
    const index_t off = op.block_offsets[e];
    const index_t nb = static_cast<index_t>(el.b_local.size());
    el.b_master.resize(static_cast<std::size_t>(nb));
    for (index_t j = 0; j < nb; ++j) {
      const index_t row = off + el.b_local[static_cast<std::size_t>(j)];
      auto pc = inputs.p_mat.row_cols(row);
      auto pv = inputs.p_mat.row_vals(row);
      auto& entries = el.b_master[static_cast<std::size_t>(j)];
      entries.resize(pc.size());
      for (std::size_t k = 0; k < pc.size(); ++k)
        entries[k] = {ordinal[static_cast<std::size_t>(pc[k])], pv[k]};
    }
    // S += P_b^T Schur P_b through the interface rows of P
    for (index_t i = 0; i < nb; ++i) {
      for (const SignedDof& di : el.b_master[static_cast<std::size_t>(i)]) {
        for (index_t j = 0; j < nb; ++j)
          for (const SignedDof& dj : el.b_master[static_cast<std::size_t>(j)]) {
            rows.push_back(di.global);
            cols.push_back(dj.global);
            vals.push_back(di.sign * dj.sign * pt.schur(i, j));
          }
        f_s[static_cast<std::size_t>(di.global)] += di.sign * pt.f_s[static_cast<std::size_t>(i)];
      }
    }
  }
  op.s_mat = CsrMatrix::from_triplets(n_master, n_master, rows, cols, vals);
  return {std::move(op), std::move(f_s)};
}

std::vector<double> recover_condensed(const CondensedOperator& op, const std::vector<double>& x_b,
                                      const std::vector<double>& f_hat) {
  if (static_cast<index_t>(x_b.size()) != op.s_mat.nrows)
    throw DimensionMismatch("recover_condensed: x_b length");
  if (static_cast<index_t>(f_hat.size()) != op.block_offsets.back())
    throw DimensionMismatch("recover_condensed: f_hat length");

  std::vector<double> x(static_cast<std::size_t>(op.n_global), 0.0);
  for (std::size_t o = 0; o < op.master_globals.size(); ++o)
    x[static_cast<std::size_t>(op.master_globals[o])] = x_b[o];

  for (std::size_t e = 0; e < op.elements.size(); ++e) {
    const auto& el = op.elements[e];
    if (el.i_local.empty()) continue;
    const index_t off = op.block_offsets[e];
    std::vector<double> xb_local(el.b_local.size(), 0.0);
    for (std::size_t j = 0; j < el.b_local.size(); ++j)
      for (const SignedDof& d : el.b_master[j]) xb_local[j] += d.sign * x_b[static_cast<std::size_t>(d.global)];
    std::vector<double> rhs = gather(f_hat, off, el.i_local);
    if (!el.b_local.empty()) {
      const std::vector<double> corr = dense_apply(el.a_ib, xb_local);
      for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] -= corr[i];
    }
    const std::vector<double> xi = lu_solve_refined(el.a_ii_mat, el.a_ii, rhs);
    for (std::size_t i = 0; i < el.i_local.size(); ++i)
      x[static_cast<std::size_t>(el.i_global[i].global)] = xi[i] / el.i_global[i].sign;
  }
  return x;
}

EliminationResult eliminate_essential(const RtSpace& space, const ReductionInputs& inputs,
                                      const std::vector<EssentialBc>& bcs) {
  const index_t n = inputs.p_mat.ncols;
  std::vector<char> elim(static_cast<std::size_t>(n), 0);
  std::vector<double> prescribed(static_cast<std::size_t>(n), 0.0);
  for (const EssentialBc& bc : bcs) {
    if (bc.face < 0 || bc.face >= space.mesh.nfaces())
      throw std::invalid_argument("eliminate_essential: face index out of range");
    if (!space.mesh.face(bc.face).is_boundary)
      throw std::invalid_argument("eliminate_essential: face " + std::to_string(bc.face) + " is not on the boundary");
    for (index_t sub = 0; sub < space.dofs_per_face; ++sub) {
      const index_t gdof = bc.face * space.dofs_per_face + sub;
      if (elim[static_cast<std::size_t>(gdof)])
        throw std::invalid_argument("eliminate_essential: face " + std::to_string(bc.face) + " listed twice");
      elim[static_cast<std::size_t>(gdof)] = 1;
      prescribed[static_cast<std::size_t>(gdof)] = (sub == 0) ? bc.normal_flux : 0.0;
    }
  }

  EliminationResult out;
  out.prescribed = prescribed;
  std::vector<index_t> new_global(static_cast<std::size_t>(n), -1);
  for (index_t gdof = 0; gdof < n; ++gdof) {
    if (!elim[static_cast<std::size_t>(gdof)]) {
      new_global[static_cast<std::size_t>(gdof)] = static_cast<index_t>(out.kept_globals.size());
      out.kept_globals.push_back(gdof);
    }
  }

  ReductionInputs red;
  red.a_hat.global_dim = static_cast<index_t>(out.kept_globals.size());
  red.a_hat.blocks.reserve(inputs.a_hat.blocks.size());
  std::vector<index_t> broken_keep;  // old broken index of each new broken dof
  const auto offsets = block_offsets(inputs.a_hat);
  for (std::size_t e = 0; e < inputs.a_hat.blocks.size(); ++e) {
    const auto& blk = inputs.a_hat.blocks[e];
    const index_t nel = static_cast<index_t>(blk.dof_map.size());
    std::vector<index_t> keep, drop;
    for (index_t l = 0; l < nel; ++l)
      (elim[static_cast<std::size_t>(blk.dof_map[static_cast<std::size_t>(l)].global)] ? drop : keep).push_back(l);

    ElementBlockOperator::Block nb;
    nb.matrix = submatrix(blk.matrix, keep, keep);
    nb.dof_map.reserve(keep.size());
    for (index_t l : keep) {
      const SignedDof& d = blk.dof_map[static_cast<std::size_t>(l)];
      nb.dof_map.push_back({new_global[static_cast<std::size_t>(d.global)], d.sign});
      broken_keep.push_back(offsets[e] + l);
    }
    // rhs absorbs the prescribed values: f_keep -= A[keep, drop] * x_drop
    std::vector<double> f_local(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
      double v = inputs.f_hat[static_cast<std::size_t>(offsets[e] + keep[i])];
      for (index_t l : drop) {
        const SignedDof& d = blk.dof_map[static_cast<std::size_t>(l)];
        const double local_value = d.sign * prescribed[static_cast<std::size_t>(d.global)];
        v -= blk.matrix(keep[i], l) * local_value;
      }
      f_local[i] = v;
    }
    red.f_hat.insert(red.f_hat.end(), f_local.begin(), f_local.end());
    red.a_hat.blocks.push_back(std::move(nb));
  }
  red.a_hat.broken_dim = static_cast<index_t>(broken_keep.size());

  // P from the surviving dof maps (one signed entry per broken row)
  red.p_mat = CsrMatrix(red.a_hat.broken_dim, red.a_hat.global_dim);
  {
    index_t row = 0;
    for (const auto& blk : red.a_hat.blocks) {
      for (const SignedDof& d : blk.dof_map) {
        red.p_mat.col_indices.push_back(d.global);
        red.p_mat.values.push_back(d.sign);
        red.p_mat.row_offsets[static_cast<std::size_t>(row) + 1] = row + 1;
        ++row;
      }
    }
  }

  // C keeps its rows; eliminated columns are zero columns (boundary dofs)
  std::vector<index_t> new_broken(static_cast<std::size_t>(inputs.a_hat.broken_dim), -1);
  for (std::size_t i = 0; i < broken_keep.size(); ++i)
    new_broken[static_cast<std::size_t>(broken_keep[i])] = static_cast<index_t>(i);
  {
    std::vector<index_t> rows, cols;
    std::vector<double> vals;
    for (index_t r = 0; r < inputs.c_mat.nrows; ++r) {
      auto cc = inputs.c_mat.row_cols(r);
      auto cv = inputs.c_mat.row_vals(r);
      for (std::size_t k = 0; k < cc.size(); ++k) {
        const index_t nbcol = new_broken[static_cast<std::size_t>(cc[k])];
        if (nbcol < 0)
          throw std::invalid_argument("eliminate_essential: constraint touches an eliminated dof");
        rows.push_back(r);
        cols.push_back(nbcol);
        vals.push_back(cv[k]);
      }
    }
    red.c_mat = CsrMatrix::from_triplets(inputs.c_mat.nrows, red.a_hat.broken_dim, rows, cols, vals);
  }

  if (inputs.interior_global_begin >= 0) {
    index_t shift = 0;
    for (index_t gdof = 0; gdof < inputs.interior_global_begin && gdof < n; ++gdof)
      if (elim[static_cast<std::size_t>(gdof)]) ++shift;
    red.interior_global_begin = inputs.interior_global_begin - shift;
  }
  out.inputs = std::move(red);
  return out;
}

std::vector<double> expand_eliminated(const EliminationResult& elim, const std::vector<double>& reduced,
                                      index_t full_n) {
  if (reduced.size() != elim.kept_globals.size())
    throw DimensionMismatch("expand_eliminated: reduced solution length");
  std::vector<double> full = elim.prescribed;
  full.resize(static_cast<std::size_t>(full_n), 0.0);
  for (std::size_t i = 0; i < elim.kept_globals.size(); ++i)
    full[static_cast<std::size_t>(elim.kept_globals[i])] = reduced[i];
  return full;
}

std::vector<double> near_nullspace_check(const RtSpace& space, const CellCoefficients& coeffs, bool weighted,
                                         index_t dense_cap) {
  const CsrMatrix c_mat = build_C(space, weighted);
  const index_t m = c_mat.nrows;
  if (m == 0) return {};
  if (m * m > dense_cap) throw CapExceeded("near_nullspace_check: m = " + std::to_string(m) + " exceeds dense cap");

  const CsrMatrix ct = transpose(c_mat);
  DenseMatrix cyc(m, m);
  std::vector<index_t> all_local(static_cast<std::size_t>(space.element_ndofs));
  for (index_t l = 0; l < space.element_ndofs; ++l) all_local[static_cast<std::size_t>(l)] = l;

  for (index_t cell = 0; cell < space.mesh.ncells(); ++cell) {
    const ElementMatrices em = element_matrices(space, cell, coeffs);
    const LuFactors m_lu = lu_factor(em.m_mat);
    const DenseMatrix minv_bt = lu_solve_matrix(m_lu, dense_transpose(em.b_mat));   // M^-1 B^T
    const DenseMatrix bmbt = dense_multiply(em.b_mat, minv_bt);                     // B M^-1 B^T
    const DenseMatrix minv = lu_inverse(m_lu);
    const DenseMatrix inner = lu_solve_matrix(lu_factor(bmbt), dense_transpose(minv_bt));  // (B M^-1 B^T)^-1 B M^-1
    const DenseMatrix y = dense_add(minv, dense_multiply(minv_bt, inner), -1.0);

    std::vector<index_t> rows;
    DenseMatrix c_e;
    constraint_slice(c_mat, ct, cell * space.element_ndofs, space.element_ndofs, all_local, rows, c_e);
    if (rows.empty()) continue;
    const DenseMatrix cyc_e = dense_multiply(c_e, dense_multiply(y, dense_transpose(c_e)));
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < rows.size(); ++c)
        cyc(rows[r], rows[c]) += cyc_e(static_cast<index_t>(r), static_cast<index_t>(c));
  }
  return symmetric_eigenvalues(cyc);
}

}  // namespace hdivred
