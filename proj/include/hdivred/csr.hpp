#ifndef HDIVRED_CSR_HPP
#define HDIVRED_CSR_HPP

#include <span>
#include <vector>

#include "hdivred/dense.hpp"

namespace hdivred {

/// Compressed-row sparse matrix with strictly increasing column indices per
/// row. Immutable after construction; explicit zeros are permitted.
struct CsrMatrix {
  index_t nrows = 0;
  index_t ncols = 0;
  std::vector<index_t> row_offsets;  // length nrows + 1
  std::vector<index_t> col_indices;
  std::vector<double> values;

  CsrMatrix() : row_offsets{0} {}
  CsrMatrix(index_t rows, index_t cols) : nrows(rows), ncols(cols), row_offsets(static_cast<std::size_t>(rows) + 1, 0) {}

  index_t nnz() const { return static_cast<index_t>(col_indices.size()); }
  std::span<const index_t> row_cols(index_t i) const {
    return {col_indices.data() + row_offsets[static_cast<std::size_t>(i)],
            static_cast<std::size_t>(row_offsets[static_cast<std::size_t>(i) + 1] - row_offsets[static_cast<std::size_t>(i)])};
  }
  std::span<const double> row_vals(index_t i) const {
    return {values.data() + row_offsets[static_cast<std::size_t>(i)],
            static_cast<std::size_t>(row_offsets[static_cast<std::size_t>(i) + 1] - row_offsets[static_cast<std::size_t>(i)])};
  }

  /// Throws if the structural invariants fail (offsets, sorted columns, finite values).
  void validate() const;

  static CsrMatrix identity(index_t n);
  /// Duplicate (i,j) pairs are summed; columns come out sorted.
  static CsrMatrix from_triplets(index_t nrows, index_t ncols,
                                 const std::vector<index_t>& rows,
                                 const std::vector<index_t>& cols,
                                 const std::vector<double>& vals);
};

std::vector<double> spmv(const CsrMatrix& a, const std::vector<double>& x);
CsrMatrix transpose(const CsrMatrix& a);

/// R * A * P with sorted, deduplicated columns (two-pass symbolic/numeric build).
CsrMatrix triple_product(const CsrMatrix& r, const CsrMatrix& a, const CsrMatrix& p);

constexpr index_t kDefaultDenseCap = 4000000;

DenseMatrix to_dense(const CsrMatrix& a, index_t dense_cap = kDefaultDenseCap);
CsrMatrix from_dense(const DenseMatrix& a, double drop_tol = 0.0);

bool same_pattern_and_values(const CsrMatrix& a, const CsrMatrix& b);
/// max_ij |a - b| over the union pattern.
double max_abs_difference(const CsrMatrix& a, const CsrMatrix& b);
double max_abs(const CsrMatrix& a);

}  // namespace hdivred

#endif
