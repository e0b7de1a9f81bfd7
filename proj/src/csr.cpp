#include "hdivred/csr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hdivred/errors.hpp"

namespace hdivred {

void CsrMatrix::validate() const {
  if (static_cast<index_t>(row_offsets.size()) != nrows + 1)
    throw DimensionMismatch("CsrMatrix: row_offsets length != nrows + 1");
  if (row_offsets.front() != 0) throw DimensionMismatch("CsrMatrix: row_offsets[0] != 0");
  if (row_offsets.back() != nnz() || values.size() != col_indices.size())
    throw DimensionMismatch("CsrMatrix: offsets/nnz mismatch");
  for (index_t i = 0; i < nrows; ++i) {
    if (row_offsets[static_cast<std::size_t>(i)] > row_offsets[static_cast<std::size_t>(i) + 1])
      throw DimensionMismatch("CsrMatrix: row_offsets not non-decreasing");
    index_t prev = -1;
    for (index_t k = row_offsets[static_cast<std::size_t>(i)]; k < row_offsets[static_cast<std::size_t>(i) + 1]; ++k) {
      const index_t c = col_indices[static_cast<std::size_t>(k)];
      if (c <= prev || c >= ncols) throw DimensionMismatch("CsrMatrix: columns not strictly increasing in row " + std::to_string(i));
      prev = c;
    }
  }
  for (double v : values)
    if (!std::isfinite(v)) throw DimensionMismatch("CsrMatrix: non-finite value");
}

CsrMatrix CsrMatrix::identity(index_t n) {
  CsrMatrix a(n, n);
  a.col_indices.resize(static_cast<std::size_t>(n));
  a.values.assign(static_cast<std::size_t>(n), 1.0);
  for (index_t i = 0; i < n; ++i) {
    a.row_offsets[static_cast<std::size_t>(i) + 1] = i + 1;
    a.col_indices[static_cast<std::size_t>(i)] = i;
  }
  return a;
}

CsrMatrix CsrMatrix::from_triplets(index_t nrows, index_t ncols,
                                   const std::vector<index_t>& rows,
                                   const std::vector<index_t>& cols,
                                   const std::vector<double>& vals) {
  if (rows.size() != cols.size() || rows.size() != vals.size())
    throw DimensionMismatch("from_triplets: array lengths differ");
  const std::size_t nt = rows.size();
  std::vector<std::size_t> order(nt);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rows[a] != rows[b]) return rows[a] < rows[b];
    return cols[a] < cols[b];
  });

  CsrMatrix m(nrows, ncols);
  m.col_indices.reserve(nt);
  m.values.reserve(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const std::size_t k = order[t];
    if (rows[k] < 0 || rows[k] >= nrows || cols[k] < 0 || cols[k] >= ncols)
      throw DimensionMismatch("from_triplets: index out of range");
    if (!m.col_indices.empty() && t > 0 && rows[order[t - 1]] == rows[k] && cols[order[t - 1]] == cols[k]) {
      m.values.back() += vals[k];
    } else {
      m.col_indices.push_back(cols[k]);
      m.values.push_back(vals[k]);
      m.row_offsets[static_cast<std::size_t>(rows[k]) + 1] += 1;
    }
  }
  for (index_t i = 0; i < nrows; ++i)
    m.row_offsets[static_cast<std::size_t>(i) + 1] += m.row_offsets[static_cast<std::size_t>(i)];
  return m;
}

std::vector<double> spmv(const CsrMatrix& a, const std::vector<double>& x) {
  if (static_cast<index_t>(x.size()) != a.ncols) throw DimensionMismatch("spmv: vector length != ncols");
  std::vector<double> y(static_cast<std::size_t>(a.nrows), 0.0);
  for (index_t i = 0; i < a.nrows; ++i) {
    double s = 0.0;
    for (index_t k = a.row_offsets[static_cast<std::size_t>(i)]; k < a.row_offsets[static_cast<std::size_t>(i) + 1]; ++k)
      s += a.values[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(a.col_indices[static_cast<std::size_t>(k)])];
    y[static_cast<std::size_t>(i)] = s;
  }
  return y;
}

CsrMatrix transpose(const CsrMatrix& a) {
  CsrMatrix t(a.ncols, a.nrows);
  t.col_indices.resize(a.col_indices.size());
  t.values.resize(a.values.size());
  std::vector<index_t> count(static_cast<std::size_t>(a.ncols), 0);
  for (index_t c : a.col_indices) count[static_cast<std::size_t>(c)] += 1;
  for (index_t j = 0; j < a.ncols; ++j)
    t.row_offsets[static_cast<std::size_t>(j) + 1] = t.row_offsets[static_cast<std::size_t>(j)] + count[static_cast<std::size_t>(j)];
  std::vector<index_t> cursor(t.row_offsets.begin(), t.row_offsets.end() - 1);
  for (index_t i = 0; i < a.nrows; ++i) {
    for (index_t k = a.row_offsets[static_cast<std::size_t>(i)]; k < a.row_offsets[static_cast<std::size_t>(i) + 1]; ++k) {
      const index_t j = a.col_indices[static_cast<std::size_t>(k)];
      const index_t pos = cursor[static_cast<std::size_t>(j)]++;
      t.col_indices[static_cast<std::size_t>(pos)] = i;
      t.values[static_cast<std::size_t>(pos)] = a.values[static_cast<std::size_t>(k)];
    }
  }
  return t;
}

namespace {

// Row pattern of R*A*P for one row, via a sparse accumulator. Shared by the
// symbolic and numeric passes so both see the identical sorted pattern.
void gather_row(const CsrMatrix& r, const CsrMatrix& a, const CsrMatrix& p, index_t row,
                std::vector<index_t>& marker, index_t stamp, std::vector<index_t>& out_cols) {
  out_cols.clear();
  for (index_t kr = r.row_offsets[static_cast<std::size_t>(row)]; kr < r.row_offsets[static_cast<std::size_t>(row) + 1]; ++kr) {
    const index_t ka = r.col_indices[static_cast<std::size_t>(kr)];
    for (index_t ia = a.row_offsets[static_cast<std::size_t>(ka)]; ia < a.row_offsets[static_cast<std::size_t>(ka) + 1]; ++ia) {
      const index_t jp = a.col_indices[static_cast<std::size_t>(ia)];
      for (index_t ip = p.row_offsets[static_cast<std::size_t>(jp)]; ip < p.row_offsets[static_cast<std::size_t>(jp) + 1]; ++ip) {
        const index_t c = p.col_indices[static_cast<std::size_t>(ip)];
        if (marker[static_cast<std::size_t>(c)] != stamp) {
          marker[static_cast<std::size_t>(c)] = stamp;
          out_cols.push_back(c);
        }
      }
    }
  }
  std::sort(out_cols.begin(), out_cols.end());
}

}  // namespace

CsrMatrix triple_product(const CsrMatrix& r, const CsrMatrix& a, const CsrMatrix& p) {
  if (r.ncols != a.nrows || a.ncols != p.nrows)
    throw DimensionMismatch("triple_product: dimension chain R.ncols = A.nrows, A.ncols = P.nrows violated");

  CsrMatrix out(r.nrows, p.ncols);
  std::vector<index_t> marker(static_cast<std::size_t>(p.ncols), -1);
  std::vector<index_t> cols;

  // Symbolic pass: per-row nnz counts.
  for (index_t i = 0; i < r.nrows; ++i) {
    gather_row(r, a, p, i, marker, i, cols);
    out.row_offsets[static_cast<std::size_t>(i) + 1] = out.row_offsets[static_cast<std::size_t>(i)] + static_cast<index_t>(cols.size());
  }
  out.col_indices.resize(static_cast<std::size_t>(out.row_offsets.back()));
  out.values.assign(static_cast<std::size_t>(out.row_offsets.back()), 0.0);

  // Numeric pass: accumulate into the sorted pattern.
  std::fill(marker.begin(), marker.end(), index_t{-1});
  std::vector<double> accum(static_cast<std::size_t>(p.ncols), 0.0);
  for (index_t i = 0; i < r.nrows; ++i) {
    gather_row(r, a, p, i, marker, i, cols);
    for (index_t c : cols) accum[static_cast<std::size_t>(c)] = 0.0;
    for (index_t kr = r.row_offsets[static_cast<std::size_t>(i)]; kr < r.row_offsets[static_cast<std::size_t>(i) + 1]; ++kr) {
      const index_t ka = r.col_indices[static_cast<std::size_t>(kr)];
      const double rv = r.values[static_cast<std::size_t>(kr)];
      for (index_t ia = a.row_offsets[static_cast<std::size_t>(ka)]; ia < a.row_offsets[static_cast<std::size_t>(ka) + 1]; ++ia) {
        const index_t jp = a.col_indices[static_cast<std::size_t>(ia)];
        const double rav = rv * a.values[static_cast<std::size_t>(ia)];
        for (index_t ip = p.row_offsets[static_cast<std::size_t>(jp)]; ip < p.row_offsets[static_cast<std::size_t>(jp) + 1]; ++ip) {
          accum[static_cast<std::size_t>(p.col_indices[static_cast<std::size_t>(ip)])] += rav * p.values[static_cast<std::size_t>(ip)];
        }
      }
    }
    index_t pos = out.row_offsets[static_cast<std::size_t>(i)];
    for (index_t c : cols) {
      out.col_indices[static_cast<std::size_t>(pos)] = c;
      out.values[static_cast<std::size_t>(pos)] = accum[static_cast<std::size_t>(c)];
      ++pos;
    }
  }
  return out;
}

DenseMatrix to_dense(const CsrMatrix& a, index_t dense_cap) {
  if (a.nrows * a.ncols > dense_cap)
    throw CapExceeded("to_dense: " + std::to_string(a.nrows) + "x" + std::to_string(a.ncols) + " exceeds cap");
  DenseMatrix d(a.nrows, a.ncols);
  for (index_t i = 0; i < a.nrows; ++i)
    for (index_t k = a.row_offsets[static_cast<std::size_t>(i)]; k < a.row_offsets[static_cast<std::size_t>(i) + 1]; ++k)
      d(i, a.col_indices[static_cast<std::size_t>(k)]) += a.values[static_cast<std::size_t>(k)];
  return d;
}

CsrMatrix from_dense(const DenseMatrix& a, double drop_tol) {
  CsrMatrix m(a.nrows, a.ncols);
  for (index_t i = 0; i < a.nrows; ++i) {
    for (index_t j = 0; j < a.ncols; ++j) {
      const double v = a(i, j);
      if (std::abs(v) > drop_tol) {
        m.col_indices.push_back(j);
        m.values.push_back(v);
      }
    }
    m.row_offsets[static_cast<std::size_t>(i) + 1] = static_cast<index_t>(m.col_indices.size());
  }
  return m;
}

bool same_pattern_and_values(const CsrMatrix& a, const CsrMatrix& b) {
  return a.nrows == b.nrows && a.ncols == b.ncols && a.row_offsets == b.row_offsets &&
         a.col_indices == b.col_indices && a.values == b.values;
}

double max_abs_difference(const CsrMatrix& a, const CsrMatrix& b) {
  if (a.nrows != b.nrows || a.ncols != b.ncols) throw DimensionMismatch("max_abs_difference: shapes differ");
  double m = 0.0;
  for (index_t i = 0; i < a.nrows; ++i) {
    auto ac = a.row_cols(i);
    auto av = a.row_vals(i);
    auto bc = b.row_cols(i);
    auto bv = b.row_vals(i);
    std::size_t ka = 0, kb = 0;
    while (ka < ac.size() || kb < bc.size()) {
      if (kb == bc.size() || (ka < ac.size() && ac[ka] < bc[kb])) {
        m = std::max(m, std::abs(av[ka]));
        ++ka;
      } else if (ka == ac.size() || bc[kb] < ac[ka]) {
        m = std::max(m, std::abs(bv[kb]));
        ++kb;
      } else {
        m = std::max(m, std::abs(av[ka] - bv[kb]));
        ++ka;
        ++kb;
      }
    }
  }
  return m;
}

double max_abs(const CsrMatrix& a) {
  double m = 0.0;
  for (double v : a.values) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace hdivred
