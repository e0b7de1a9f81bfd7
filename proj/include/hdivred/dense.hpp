#ifndef HDIVRED_DENSE_HPP
#define HDIVRED_DENSE_HPP

#include <cstdint>
#include <vector>

namespace hdivred {

using index_t = std::int64_t;

/// Row-major dense matrix.
struct DenseMatrix {
  index_t nrows = 0;
  index_t ncols = 0;
  std::vector<double> entries;  // nrows * ncols, row-major

  DenseMatrix() = default;
  DenseMatrix(index_t rows, index_t cols)
      : nrows(rows), ncols(cols), entries(static_cast<std::size_t>(rows * cols), 0.0) {}

  double& operator()(index_t i, index_t j) { return entries[static_cast<std::size_t>(i * ncols + j)]; }
  double operator()(index_t i, index_t j) const { return entries[static_cast<std::size_t>(i * ncols + j)]; }

  static DenseMatrix identity(index_t n);
};

DenseMatrix dense_multiply(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix dense_transpose(const DenseMatrix& a);
DenseMatrix dense_add(const DenseMatrix& a, const DenseMatrix& b, double b_scale = 1.0);
std::vector<double> dense_apply(const DenseMatrix& a, const std::vector<double>& x);
double dense_max_abs(const DenseMatrix& a);

/// Packed LU factorization with partial pivoting: unit-lower L strictly below
/// the diagonal, U on and above, row permutation in pivots.
struct LuFactors {
  index_t n = 0;
  DenseMatrix packed_lu;
  std::vector<index_t> pivots;
};

/// Partial pivoting by max column magnitude; throws SingularBlock when a pivot
/// magnitude drops below 1e-14 * max|A|.
LuFactors lu_factor(const DenseMatrix& a);
std::vector<double> lu_solve(const LuFactors& f, const std::vector<double>& b);

/// b - A x with compensated (twofold) accumulation; feeds iterative refinement.
std::vector<double> compensated_residual(const DenseMatrix& a, const std::vector<double>& x,
                                         const std::vector<double>& b);

/// LU solve followed by compensated-residual refinement steps. Keeps the
/// forward error near working precision even for ill-conditioned blocks
/// (coefficient ratios up to ~1e8), where a single LU pass loses digits.
std::vector<double> lu_solve_refined(const DenseMatrix& a, const LuFactors& f, const std::vector<double>& b,
                                     int steps = 2);
/// Solves A X = B column-by-column, B given densely.
DenseMatrix lu_solve_matrix(const LuFactors& f, const DenseMatrix& b);
DenseMatrix lu_inverse(const LuFactors& f);

/// Cholesky pivots of a symmetric matrix; returns false if any pivot is <= 0.
bool cholesky_pivots_positive(const DenseMatrix& a);

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
std::vector<double> symmetric_eigenvalues(const DenseMatrix& a, double tol = 1e-13);

}  // namespace hdivred

#endif
