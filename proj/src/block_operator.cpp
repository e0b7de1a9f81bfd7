#include "hdivred/block_operator.hpp"

#include <cmath>
#include <string>

#include "hdivred/errors.hpp"

namespace hdivred {

void ElementBlockOperator::validate() const {
  index_t total = 0;
  for (const Block& b : blocks) {
    const index_t n = static_cast<index_t>(b.dof_map.size());
    if (b.matrix.nrows != n || b.matrix.ncols != n)
      throw DimensionMismatch("ElementBlockOperator: block matrix size != dof map length");
    for (const SignedDof& d : b.dof_map) {
      if (d.global < 0 || d.global >= global_dim)
        throw DimensionMismatch("ElementBlockOperator: global dof index out of range");
      if (d.sign != 1.0 && d.sign != -1.0)
        throw DimensionMismatch("ElementBlockOperator: sign not +-1");
    }
    for (double v : b.matrix.entries)
      if (!std::isfinite(v)) throw DimensionMismatch("ElementBlockOperator: non-finite entry");
    total += n;
  }
  if (total != broken_dim) throw DimensionMismatch("ElementBlockOperator: broken_dim != sum of block sizes");
}

DenseMatrix to_dense(const ElementBlockOperator& op, index_t dense_cap) {
  if (op.broken_dim * op.broken_dim > dense_cap)
    throw CapExceeded("to_dense(block): broken dim " + std::to_string(op.broken_dim) + " exceeds cap");
  DenseMatrix d(op.broken_dim, op.broken_dim);
  index_t off = 0;
  for (const auto& b : op.blocks) {
    const index_t n = static_cast<index_t>(b.dof_map.size());
    for (index_t i = 0; i < n; ++i)
      for (index_t j = 0; j < n; ++j) d(off + i, off + j) = b.matrix(i, j);
    off += n;
  }
  return d;
}

CsrMatrix block_diagonal_csr(const ElementBlockOperator& op) {
  CsrMatrix m(op.broken_dim, op.broken_dim);
  index_t nnz = 0;
  for (const auto& b : op.blocks) nnz += static_cast<index_t>(b.dof_map.size() * b.dof_map.size());
  m.col_indices.reserve(static_cast<std::size_t>(nnz));
  m.values.reserve(static_cast<std::size_t>(nnz));
  index_t off = 0;
  for (const auto& b : op.blocks) {
    const index_t n = static_cast<index_t>(b.dof_map.size());
    for (index_t i = 0; i < n; ++i) {
      for (index_t j = 0; j < n; ++j) {
        m.col_indices.push_back(off + j);
        m.values.push_back(b.matrix(i, j));
      }
      m.row_offsets[static_cast<std::size_t>(off + i) + 1] =
          m.row_offsets[static_cast<std::size_t>(off + i)] + n;
    }
    off += n;
  }
  return m;
}

CsrMatrix scatter_assemble(const ElementBlockOperator& op) {
  std::vector<index_t> rows, cols;
  std::vector<double> vals;
  std::size_t nnz = 0;
  for (const auto& b : op.blocks) nnz += b.dof_map.size() * b.dof_map.size();
  rows.reserve(nnz);
  cols.reserve(nnz);
  vals.reserve(nnz);
  for (const auto& b : op.blocks) {
    const index_t n = static_cast<index_t>(b.dof_map.size());
    for (index_t i = 0; i < n; ++i) {
      for (index_t j = 0; j < n; ++j) {
        rows.push_back(b.dof_map[static_cast<std::size_t>(i)].global);
        cols.push_back(b.dof_map[static_cast<std::size_t>(j)].global);
        vals.push_back(b.dof_map[static_cast<std::size_t>(i)].sign * b.dof_map[static_cast<std::size_t>(j)].sign *
                       b.matrix(i, j));
      }
    }
  }
  return CsrMatrix::from_triplets(op.global_dim, op.global_dim, rows, cols, vals);
}

CsrMatrix triple_product(const CsrMatrix& r, const ElementBlockOperator& op, const CsrMatrix& p) {
  if (r.ncols != op.broken_dim || p.nrows != op.broken_dim)
    throw DimensionMismatch("triple_product(block): dimension chain violated");
  return triple_product(r, block_diagonal_csr(op), p);
}

std::vector<double> block_apply(const ElementBlockOperator& op, const std::vector<double>& x) {
  if (static_cast<index_t>(x.size()) != op.broken_dim)
    throw DimensionMismatch("block_apply: vector length != broken_dim");
  std::vector<double> y(x.size(), 0.0);
  index_t off = 0;
  for (const auto& b : op.blocks) {
    const index_t n = static_cast<index_t>(b.dof_map.size());
    for (index_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (index_t j = 0; j < n; ++j) s += b.matrix(i, j) * x[static_cast<std::size_t>(off + j)];
      y[static_cast<std::size_t>(off + i)] = s;
    }
    off += n;
  }
  return y;
}

}  // namespace hdivred
