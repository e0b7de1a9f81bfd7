#include "hdivred/reference.hpp"

#include <algorithm>
#include <string>

#include "hdivred/dd.hpp"
#include "hdivred/errors.hpp"

namespace hdivred {

void dd_lu_factor(DdMatrix& a, std::vector<index_t>& pivots) {
  const index_t n = a.nrows;
  pivots.resize(static_cast<std::size_t>(n));
  for (index_t k = 0; k < n; ++k) {
    index_t piv = k;
    for (index_t i = k + 1; i < n; ++i)
      if (abs_hi(a(i, k)) > abs_hi(a(piv, k))) piv = i;
    if (abs_hi(a(piv, k)) == 0.0) throw SingularBlock("dd_lu_factor: zero pivot at " + std::to_string(k));
    pivots[static_cast<std::size_t>(k)] = piv;
    if (piv != k)
      for (index_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
    for (index_t i = k + 1; i < n; ++i) {
      const Dd l = a(i, k) / a(k, k);
      a(i, k) = l;
      if (l.hi == 0.0 && l.lo == 0.0) continue;
      for (index_t j = k + 1; j < n; ++j) a(i, j) -= l * a(k, j);
    }
  }
}

std::vector<Dd> dd_lu_solve(const DdMatrix& lu, const std::vector<index_t>& pivots, std::vector<Dd> b) {
  const index_t n = lu.nrows;
  for (index_t k = 0; k < n; ++k) {
    const index_t piv = pivots[static_cast<std::size_t>(k)];
    if (piv != k) std::swap(b[static_cast<std::size_t>(k)], b[static_cast<std::size_t>(piv)]);
  }
  for (index_t k = 0; k < n; ++k) {
    const Dd bk = b[static_cast<std::size_t>(k)];
    if (bk.hi == 0.0 && bk.lo == 0.0) continue;
    for (index_t i = k + 1; i < n; ++i) b[static_cast<std::size_t>(i)] -= lu(i, k) * bk;
  }
  for (index_t i = n - 1; i >= 0; --i) {
    Dd s = b[static_cast<std::size_t>(i)];
    for (index_t j = i + 1; j < n; ++j) s -= lu(i, j) * b[static_cast<std::size_t>(j)];
    b[static_cast<std::size_t>(i)] = s / lu(i, i);
  }
  return b;
}

namespace {

struct DdLu {
  DdMatrix lu;
  std::vector<index_t> pivots;

  std::vector<Dd> solve(std::vector<Dd> b) const { return dd_lu_solve(lu, pivots, std::move(b)); }
  DdMatrix solve_matrix(const DdMatrix& b) const {
    DdMatrix x(b.nrows, b.ncols);
    std::vector<Dd> col(static_cast<std::size_t>(b.nrows));
    for (index_t j = 0; j < b.ncols; ++j) {
      for (index_t i = 0; i < b.nrows; ++i) col[static_cast<std::size_t>(i)] = b(i, j);
      const std::vector<Dd> s = dd_lu_solve(lu, pivots, col);
      for (index_t i = 0; i < b.nrows; ++i) x(i, j) = s[static_cast<std::size_t>(i)];
    }
    return x;
  }
};

DdLu factor(DdMatrix a) {
  DdLu f;
  f.lu = std::move(a);
  dd_lu_factor(f.lu, f.pivots);
  return f;
}

DdMatrix sub_block(const DenseMatrix& a, const std::vector<index_t>& rows, const std::vector<index_t>& cols) {
  DdMatrix s(static_cast<index_t>(rows.size()), static_cast<index_t>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      s(static_cast<index_t>(i), static_cast<index_t>(j)) = a(rows[i], cols[j]);
  return s;
}

std::vector<double> to_double(const std::vector<Dd>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].value();
  return out;
}

}  // namespace

ReferencePaths reference_paths(const ReductionInputs& inputs, index_t dense_cap) {
  const index_t n_hat = inputs.a_hat.broken_dim;
  const index_t n = inputs.p_mat.ncols;
  const index_t m = inputs.c_mat.nrows;
  if (n * n > dense_cap || n_hat * n_hat > dense_cap)
    throw CapExceeded("reference_paths: instance exceeds the dense cap");

  ReferencePaths out;

  // assembled path: A = P^T A_hat P, f = P^T f_hat, all accumulated in Dd
  DdMatrix a_dd(n, n);
  std::vector<Dd> x_asm_dd;
  {
    std::vector<Dd> f(static_cast<std::size_t>(n));
    index_t off = 0;
    for (const auto& blk : inputs.a_hat.blocks) {
      const index_t nel = static_cast<index_t>(blk.dof_map.size());
      for (index_t i = 0; i < nel; ++i) {
        const SignedDof& di = blk.dof_map[static_cast<std::size_t>(i)];
        f[static_cast<std::size_t>(di.global)] +=
            Dd(di.sign) * Dd(inputs.f_hat[static_cast<std::size_t>(off + i)]);
        for (index_t j = 0; j < nel; ++j) {
          const SignedDof& dj = blk.dof_map[static_cast<std::size_t>(j)];
          a_dd(di.global, dj.global) += Dd(di.sign * dj.sign) * Dd(blk.matrix(i, j));
        }
      }
      off += nel;
    }
    x_asm_dd = factor(a_dd).solve(f);
    out.assembled = to_double(x_asm_dd);
  }

  // shared partition info
  const CsrMatrix ct = transpose(inputs.c_mat);
  auto col_used = [&](index_t broken) { return !ct.row_cols(broken).empty(); };

  struct ElementData {
    std::vector<index_t> i_local, b_local;
    std::vector<index_t> rows;  // multiplier rows
    DdLu a_ii;
    DdMatrix a_ib, a_bi, c_b;
    DdLu s_b;
    index_t off = 0;
  };

  auto build_elements = [&](bool algebraic_partition) {
    std::vector<ElementData> elements(inputs.a_hat.blocks.size());
    index_t off = 0;
    for (std::size_t e = 0; e < inputs.a_hat.blocks.size(); ++e) {
      const auto& blk = inputs.a_hat.blocks[e];
      ElementData& el = elements[e];
      el.off = off;
      const index_t nel = static_cast<index_t>(blk.dof_map.size());
      for (index_t l = 0; l < nel; ++l) {
        bool interface;
        if (algebraic_partition || inputs.interior_global_begin < 0)
          interface = col_used(off + l);
        else
          interface = blk.dof_map[static_cast<std::size_t>(l)].global < inputs.interior_global_begin;
        (interface ? el.b_local : el.i_local).push_back(l);
      }
      el.a_ii = factor(sub_block(blk.matrix, el.i_local, el.i_local));
      el.a_ib = sub_block(blk.matrix, el.i_local, el.b_local);
      el.a_bi = sub_block(blk.matrix, el.b_local, el.i_local);
      DdMatrix schur = sub_block(blk.matrix, el.b_local, el.b_local);
      if (!el.i_local.empty() && !el.b_local.empty()) {
        const DdMatrix aii_inv_aib = el.a_ii.solve_matrix(el.a_ib);
        for (index_t i = 0; i < schur.nrows; ++i)
          for (index_t j = 0; j < schur.ncols; ++j) {
            Dd s = schur(i, j);
            for (index_t k = 0; k < el.a_bi.ncols; ++k) s -= el.a_bi(i, k) * aii_inv_aib(k, j);
            schur(i, j) = s;
          }
      }
      el.s_b = factor(std::move(schur));

      // constraint slice over the interface dofs
      std::vector<index_t> rows;
      for (index_t l = 0; l < nel; ++l)
        for (index_t r : ct.row_cols(off + l)) rows.push_back(r);
      std::sort(rows.begin(), rows.end());
      rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
      el.rows = std::move(rows);
      el.c_b = DdMatrix(static_cast<index_t>(el.rows.size()), static_cast<index_t>(el.b_local.size()));
      for (std::size_t r = 0; r < el.rows.size(); ++r) {
        auto cols = inputs.c_mat.row_cols(el.rows[r]);
        auto vals = inputs.c_mat.row_vals(el.rows[r]);
        for (std::size_t j = 0; j < el.b_local.size(); ++j) {
          const index_t target = off + el.b_local[j];
          for (std::size_t k = 0; k < cols.size(); ++k) {
            if (cols[k] == target) el.c_b(static_cast<index_t>(r), static_cast<index_t>(j)) = vals[k];
            if (cols[k] >= target) break;
          }
        }
      }
      off += nel;
    }
    return elements;
  };

  // hybridized path
  std::vector<Dd> x_hat_dd(static_cast<std::size_t>(n_hat));
  std::vector<Dd> lambda_dd(static_cast<std::size_t>(m));
  {
    std::vector<ElementData> elements = build_elements(true);
    DdMatrix h(m, m);
    out.h_dense = DenseMatrix(m, m);
    std::vector<Dd> g(static_cast<std::size_t>(m));
    for (const ElementData& el : elements) {
      const index_t nr = static_cast<index_t>(el.rows.size());
      if (nr > 0) {
        DdMatrix cbt(el.c_b.ncols, el.c_b.nrows);
        for (index_t i = 0; i < el.c_b.nrows; ++i)
          for (index_t j = 0; j < el.c_b.ncols; ++j) cbt(j, i) = el.c_b(i, j);
        const DdMatrix sinv_cbt = el.s_b.solve_matrix(cbt);
        for (index_t r = 0; r < nr; ++r)
          for (index_t c = 0; c < nr; ++c) {
            Dd s;
            for (index_t k = 0; k < el.c_b.ncols; ++k) s += el.c_b(r, k) * sinv_cbt(k, c);
            h(el.rows[static_cast<std::size_t>(r)], el.rows[static_cast<std::size_t>(c)]) += s;
          }
      }
      // g = C A_hat^-1 f_hat
      std::vector<Dd> f_i(el.i_local.size()), f_b(el.b_local.size());
      for (std::size_t i = 0; i < el.i_local.size(); ++i)
        f_i[i] = inputs.f_hat[static_cast<std::size_t>(el.off + el.i_local[i])];
      for (std::size_t j = 0; j < el.b_local.size(); ++j)
        f_b[j] = inputs.f_hat[static_cast<std::size_t>(el.off + el.b_local[j])];
      const std::vector<Dd> xi0 = el.a_ii.solve(f_i);
      std::vector<Dd> rhs_b = f_b;
      for (std::size_t i = 0; i < rhs_b.size(); ++i)
        for (std::size_t k = 0; k < xi0.size(); ++k)
          rhs_b[i] -= el.a_bi(static_cast<index_t>(i), static_cast<index_t>(k)) * xi0[k];
      const std::vector<Dd> xb = el.s_b.solve(rhs_b);
      for (std::size_t r = 0; r < el.rows.size(); ++r) {
        Dd s;
        for (std::size_t k = 0; k < xb.size(); ++k)
          s += el.c_b(static_cast<index_t>(r), static_cast<index_t>(k)) * xb[k];
        g[static_cast<std::size_t>(el.rows[r])] += s;
      }
    }
    for (index_t i = 0; i < m; ++i)
      for (index_t j = 0; j < m; ++j) out.h_dense(i, j) = h(i, j).value();
    if (m > 0) lambda_dd = factor(std::move(h)).solve(g);
    out.lambda = to_double(lambda_dd);
    const std::vector<Dd>& lambda = lambda_dd;

    // back substitution x_hat = A_hat^-1 (f_hat - C^T lambda)
    std::vector<Dd>& x_hat = x_hat_dd;
    for (const ElementData& el : elements) {
      std::vector<Dd> rhs_b(el.b_local.size());
      for (std::size_t j = 0; j < el.b_local.size(); ++j)
        rhs_b[j] = inputs.f_hat[static_cast<std::size_t>(el.off + el.b_local[j])];
      for (std::size_t r = 0; r < el.rows.size(); ++r) {
        const Dd lr = lambda[static_cast<std::size_t>(el.rows[r])];
        for (std::size_t j = 0; j < rhs_b.size(); ++j)
          rhs_b[j] -= el.c_b(static_cast<index_t>(r), static_cast<index_t>(j)) * lr;
      }
      std::vector<Dd> f_i(el.i_local.size());
      for (std::size_t i = 0; i < el.i_local.size(); ++i)
        f_i[i] = inputs.f_hat[static_cast<std::size_t>(el.off + el.i_local[i])];
      const std::vector<Dd> xi0 = el.a_ii.solve(f_i);
      std::vector<Dd> rhs = rhs_b;
      for (std::size_t i = 0; i < rhs.size(); ++i)
        for (std::size_t k = 0; k < xi0.size(); ++k)
          rhs[i] -= el.a_bi(static_cast<index_t>(i), static_cast<index_t>(k)) * xi0[k];
      const std::vector<Dd> xb = el.s_b.solve(rhs);
      std::vector<Dd> xi = xi0;
      if (!el.i_local.empty() && !el.b_local.empty()) {
        std::vector<Dd> corr(el.i_local.size());
        for (std::size_t i = 0; i < corr.size(); ++i)
          for (std::size_t k = 0; k < xb.size(); ++k)
            corr[i] += el.a_ib(static_cast<index_t>(i), static_cast<index_t>(k)) * xb[k];
        const std::vector<Dd> fix = el.a_ii.solve(corr);
        for (std::size_t i = 0; i < xi.size(); ++i) xi[i] -= fix[i];
      }
      for (std::size_t i = 0; i < el.i_local.size(); ++i)
        x_hat[static_cast<std::size_t>(el.off + el.i_local[i])] = xi[i];
      for (std::size_t j = 0; j < el.b_local.size(); ++j)
        x_hat[static_cast<std::size_t>(el.off + el.b_local[j])] = xb[j];
    }
    out.x_hat = to_double(x_hat);

    // x = (P^T P)^-1 P^T x_hat
    std::vector<Dd> acc(static_cast<std::size_t>(n));
    std::vector<double> count(static_cast<std::size_t>(n), 0.0);
    for (index_t r = 0; r < inputs.p_mat.nrows; ++r) {
      auto cols = inputs.p_mat.row_cols(r);
      auto vals = inputs.p_mat.row_vals(r);
      for (std::size_t k = 0; k < cols.size(); ++k) {
        acc[static_cast<std::size_t>(cols[k])] += Dd(vals[k]) * x_hat[static_cast<std::size_t>(r)];
        count[static_cast<std::size_t>(cols[k])] += vals[k] * vals[k];
      }
    }
    out.hybridized.resize(static_cast<std::size_t>(n));
    for (index_t i = 0; i < n; ++i)
      out.hybridized[static_cast<std::size_t>(i)] =
          (acc[static_cast<std::size_t>(i)] / Dd(count[static_cast<std::size_t>(i)])).value();
  }

  // condensed path
  {
    std::vector<ElementData> elements = build_elements(false);
    // master set
    std::vector<char> is_master(static_cast<std::size_t>(n), 0);
    index_t off = 0;
    for (std::size_t e = 0; e < inputs.a_hat.blocks.size(); ++e) {
      const auto& blk = inputs.a_hat.blocks[e];
      for (index_t l : elements[e].b_local)
        is_master[static_cast<std::size_t>(blk.dof_map[static_cast<std::size_t>(l)].global)] = 1;
      off += static_cast<index_t>(blk.dof_map.size());
    }
    std::vector<index_t> masters, ordinal(static_cast<std::size_t>(n), -1);
    for (index_t gdof = 0; gdof < n; ++gdof)
      if (is_master[static_cast<std::size_t>(gdof)]) {
        ordinal[static_cast<std::size_t>(gdof)] = static_cast<index_t>(masters.size());
        masters.push_back(gdof);
      }
    const index_t nm = static_cast<index_t>(masters.size());
    DdMatrix s_mat(nm, nm);
    std::vector<Dd> f_s(static_cast<std::size_t>(nm));
    for (std::size_t e = 0; e < inputs.a_hat.blocks.size(); ++e) {
      const auto& blk = inputs.a_hat.blocks[e];
      const ElementData& el = elements[e];
      const index_t nb = static_cast<index_t>(el.b_local.size());
      // recompute the raw (unfactored) Schur complement entries
      DdMatrix schur = sub_block(blk.matrix, el.b_local, el.b_local);
      if (!el.i_local.empty() && nb > 0) {
        const DdMatrix aii_inv_aib = el.a_ii.solve_matrix(el.a_ib);
        for (index_t i = 0; i < nb; ++i)
          for (index_t j = 0; j < nb; ++j) {
            Dd s = schur(i, j);
            for (index_t k = 0; k < el.a_bi.ncols; ++k) s -= el.a_bi(i, k) * aii_inv_aib(k, j);
            schur(i, j) = s;
          }
      }
      std::vector<Dd> f_i(el.i_local.size());
      for (std::size_t i = 0; i < el.i_local.size(); ++i)
        f_i[i] = inputs.f_hat[static_cast<std::size_t>(el.off + el.i_local[i])];
      std::vector<Dd> fsl(static_cast<std::size_t>(nb));
      for (index_t j = 0; j < nb; ++j)
        fsl[static_cast<std::size_t>(j)] = inputs.f_hat[static_cast<std::size_t>(el.off + el.b_local[static_cast<std::size_t>(j)])];
      if (!el.i_local.empty()) {
        const std::vector<Dd> xi0 = el.a_ii.solve(f_i);
        for (index_t j = 0; j < nb; ++j)
          for (std::size_t k = 0; k < xi0.size(); ++k)
            fsl[static_cast<std::size_t>(j)] -= el.a_bi(j, static_cast<index_t>(k)) * xi0[k];
      }
      for (index_t i = 0; i < nb; ++i) {
        const SignedDof& di = blk.dof_map[static_cast<std::size_t>(el.b_local[static_cast<std::size_t>(i)])];
        const index_t oi = ordinal[static_cast<std::size_t>(di.global)];
        f_s[static_cast<std::size_t>(oi)] += Dd(di.sign) * fsl[static_cast<std::size_t>(i)];
        for (index_t j = 0; j < nb; ++j) {
          const SignedDof& dj = blk.dof_map[static_cast<std::size_t>(el.b_local[static_cast<std::size_t>(j)])];
          s_mat(oi, ordinal[static_cast<std::size_t>(dj.global)]) += Dd(di.sign * dj.sign) * schur(i, j);
        }
      }
    }
    std::vector<Dd> x_b(static_cast<std::size_t>(nm));
    if (nm > 0) x_b = factor(std::move(s_mat)).solve(f_s);

    std::vector<Dd> x(static_cast<std::size_t>(n));
    for (std::size_t o = 0; o < masters.size(); ++o) x[static_cast<std::size_t>(masters[o])] = x_b[o];
    for (std::size_t e = 0; e < inputs.a_hat.blocks.size(); ++e) {
      const auto& blk = inputs.a_hat.blocks[e];
      const ElementData& el = elements[e];
      if (el.i_local.empty()) continue;
      std::vector<Dd> xb_local(el.b_local.size());
      for (std::size_t j = 0; j < el.b_local.size(); ++j) {
        const SignedDof& dj = blk.dof_map[static_cast<std::size_t>(el.b_local[j])];
        xb_local[j] = Dd(dj.sign) * x_b[static_cast<std::size_t>(ordinal[static_cast<std::size_t>(dj.global)])];
      }
      std::vector<Dd> rhs(el.i_local.size());
      for (std::size_t i = 0; i < el.i_local.size(); ++i) {
        rhs[i] = inputs.f_hat[static_cast<std::size_t>(el.off + el.i_local[i])];
        for (std::size_t k = 0; k < xb_local.size(); ++k)
          rhs[i] -= el.a_ib(static_cast<index_t>(i), static_cast<index_t>(k)) * xb_local[k];
      }
      const std::vector<Dd> xi = el.a_ii.solve(rhs);
      for (std::size_t i = 0; i < el.i_local.size(); ++i) {
        const SignedDof& di = blk.dof_map[static_cast<std::size_t>(el.i_local[i])];
        x[static_cast<std::size_t>(di.global)] = Dd(di.sign) * xi[i];
      }
    }
    out.condensed = to_double(x);

    // master agreement diagnostic
    double diff = 0.0, scale = 0.0;
    for (index_t i = 0; i < n; ++i) {
      diff = std::max(diff, std::abs((x[static_cast<std::size_t>(i)] - x_asm_dd[static_cast<std::size_t>(i)]).value()));
      scale = std::max(scale, std::abs(x_asm_dd[static_cast<std::size_t>(i)].value()));
    }
    out.master_error = diff / std::max(scale, 1e-300);
  }

  // equivalence and saddle-residual diagnostics, all in extended precision
  {
    double xhat_norm = 0.0;
    for (const Dd& v : x_hat_dd) xhat_norm = std::max(xhat_norm, std::abs(v.value()));
    xhat_norm = std::max(xhat_norm, 1e-300);

    // P x_asm vs x_hat
    double equiv = 0.0;
    for (index_t r = 0; r < inputs.p_mat.nrows; ++r) {
      auto cols = inputs.p_mat.row_cols(r);
      auto vals = inputs.p_mat.row_vals(r);
      Dd px;
      for (std::size_t k = 0; k < cols.size(); ++k)
        px += Dd(vals[k]) * x_asm_dd[static_cast<std::size_t>(cols[k])];
      equiv = std::max(equiv, std::abs((px - x_hat_dd[static_cast<std::size_t>(r)]).value()));
    }
    out.equivalence_error = equiv / xhat_norm;

    // C x_hat
    double cx = 0.0;
    for (index_t r = 0; r < m; ++r) {
      auto cols = inputs.c_mat.row_cols(r);
      auto vals = inputs.c_mat.row_vals(r);
      Dd s;
      for (std::size_t k = 0; k < cols.size(); ++k)
        s += Dd(vals[k]) * x_hat_dd[static_cast<std::size_t>(cols[k])];
      cx = std::max(cx, std::abs(s.value()));
    }
    out.constraint_residual = cx / xhat_norm;

    // P^T (A_hat x_hat + C^T lambda - f_hat)
    std::vector<Dd> res(static_cast<std::size_t>(n_hat));
    {
      index_t off = 0;
      for (const auto& blk : inputs.a_hat.blocks) {
        const index_t nel = static_cast<index_t>(blk.dof_map.size());
        for (index_t i = 0; i < nel; ++i) {
          Dd s;
          for (index_t j = 0; j < nel; ++j)
            s += Dd(blk.matrix(i, j)) * x_hat_dd[static_cast<std::size_t>(off + j)];
          res[static_cast<std::size_t>(off + i)] = s - Dd(inputs.f_hat[static_cast<std::size_t>(off + i)]);
        }
        off += nel;
      }
    }
    for (index_t r = 0; r < m; ++r) {
      auto cols = inputs.c_mat.row_cols(r);
      auto vals = inputs.c_mat.row_vals(r);
      for (std::size_t k = 0; k < cols.size(); ++k)
        res[static_cast<std::size_t>(cols[k])] += Dd(vals[k]) * lambda_dd[static_cast<std::size_t>(r)];
    }
    double fnorm = 0.0;
    for (double v : inputs.f_hat) fnorm = std::max(fnorm, std::abs(v));
    double primal = 0.0;
    {
      std::vector<Dd> pt_res(static_cast<std::size_t>(n));
      for (index_t r = 0; r < inputs.p_mat.nrows; ++r) {
        auto cols = inputs.p_mat.row_cols(r);
        auto vals = inputs.p_mat.row_vals(r);
        for (std::size_t k = 0; k < cols.size(); ++k)
          pt_res[static_cast<std::size_t>(cols[k])] += Dd(vals[k]) * res[static_cast<std::size_t>(r)];
      }
      for (const Dd& v : pt_res) primal = std::max(primal, std::abs(v.value()));
    }
    out.primal_residual = primal / std::max(fnorm, 1e-300);

    // energy identity with x_hat = P x
    std::vector<Dd> px(static_cast<std::size_t>(n_hat));
    for (index_t r = 0; r < inputs.p_mat.nrows; ++r) {
      auto cols = inputs.p_mat.row_cols(r);
      auto vals = inputs.p_mat.row_vals(r);
      Dd s;
      for (std::size_t k = 0; k < cols.size(); ++k)
        s += Dd(vals[k]) * x_asm_dd[static_cast<std::size_t>(cols[k])];
      px[static_cast<std::size_t>(r)] = s;
    }
    Dd e1;
    for (index_t i = 0; i < n; ++i) {
      Dd s;
      for (index_t j = 0; j < n; ++j) s += a_dd(i, j) * x_asm_dd[static_cast<std::size_t>(j)];
      e1 += x_asm_dd[static_cast<std::size_t>(i)] * s;
    }
    Dd e2;
    {
      index_t off = 0;
      for (const auto& blk : inputs.a_hat.blocks) {
        const index_t nel = static_cast<index_t>(blk.dof_map.size());
        for (index_t i = 0; i < nel; ++i) {
          Dd s;
          for (index_t j = 0; j < nel; ++j)
            s += Dd(blk.matrix(i, j)) * px[static_cast<std::size_t>(off + j)];
          e2 += px[static_cast<std::size_t>(off + i)] * s;
        }
        off += nel;
      }
    }
    out.energy_error = std::abs((e1 - e2).value()) / std::max(std::abs(e1.value()), 1e-300);
  }

  return out;
}

}  // namespace hdivred
