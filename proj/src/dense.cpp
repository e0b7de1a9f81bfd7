#include "hdivred/dense.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hdivred/errors.hpp"

namespace hdivred {

DenseMatrix DenseMatrix::identity(index_t n) {
  DenseMatrix m(n, n);
  for (index_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix dense_multiply(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.ncols != b.nrows) throw DimensionMismatch("dense_multiply: inner dimensions differ");
  DenseMatrix c(a.nrows, b.ncols);
  for (index_t i = 0; i < a.nrows; ++i) {
    for (index_t k = 0; k < a.ncols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (index_t j = 0; j < b.ncols; ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

DenseMatrix dense_transpose(const DenseMatrix& a) {
  DenseMatrix t(a.ncols, a.nrows);
  for (index_t i = 0; i < a.nrows; ++i)
    for (index_t j = 0; j < a.ncols; ++j) t(j, i) = a(i, j);
  return t;
}

DenseMatrix dense_add(const DenseMatrix& a, const DenseMatrix& b, double b_scale) {
  if (a.nrows != b.nrows || a.ncols != b.ncols) throw DimensionMismatch("dense_add: shapes differ");
  DenseMatrix c = a;
  for (std::size_t i = 0; i < c.entries.size(); ++i) c.entries[i] += b_scale * b.entries[i];
  return c;
}

std::vector<double> dense_apply(const DenseMatrix& a, const std::vector<double>& x) {
  if (static_cast<index_t>(x.size()) != a.ncols) throw DimensionMismatch("dense_apply: vector length");
  std::vector<double> y(static_cast<std::size_t>(a.nrows), 0.0);
  for (index_t i = 0; i < a.nrows; ++i) {
    double s = 0.0;
    for (index_t j = 0; j < a.ncols; ++j) s += a(i, j) * x[static_cast<std::size_t>(j)];
    y[static_cast<std::size_t>(i)] = s;
  }
  return y;
}

double dense_max_abs(const DenseMatrix& a) {
  double m = 0.0;
  for (double v : a.entries) m = std::max(m, std::abs(v));
  return m;
}

LuFactors lu_factor(const DenseMatrix& a) {
  if (a.nrows != a.ncols) throw DimensionMismatch("lu_factor: matrix not square");
  const index_t n = a.nrows;
  LuFactors f;
  f.n = n;
  f.packed_lu = a;
  f.pivots.resize(static_cast<std::size_t>(n));
  const double threshold = 1e-14 * dense_max_abs(a);
  DenseMatrix& lu = f.packed_lu;

  for (index_t k = 0; k < n; ++k) {
    index_t piv = k;
    double piv_mag = std::abs(lu(k, k));
    for (index_t i = k + 1; i < n; ++i) {
      const double m = std::abs(lu(i, k));
      if (m > piv_mag) {
        piv_mag = m;
        piv = i;
      }
    }
    if (!(piv_mag > threshold) || piv_mag == 0.0) {
      throw SingularBlock("lu_factor: pivot " + std::to_string(k) + " below threshold");
    }
    f.pivots[static_cast<std::size_t>(k)] = piv;
    if (piv != k) {
      for (index_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
    }
    const double inv_piv = 1.0 / lu(k, k);
    for (index_t i = k + 1; i < n; ++i) {
      const double l = lu(i, k) * inv_piv;
      lu(i, k) = l;
      if (l == 0.0) continue;
      for (index_t j = k + 1; j < n; ++j) lu(i, j) -= l * lu(k, j);
    }
  }
  return f;
}

std::vector<double> lu_solve(const LuFactors& f, const std::vector<double>& b) {
  if (static_cast<index_t>(b.size()) != f.n) throw DimensionMismatch("lu_solve: rhs length");
  const index_t n = f.n;
  std::vector<double> x = b;
  // row interchanges in factorization order, then L and U sweeps
  for (index_t k = 0; k < n; ++k) {
    const index_t piv = f.pivots[static_cast<std::size_t>(k)];
    if (piv != k) std::swap(x[static_cast<std::size_t>(k)], x[static_cast<std::size_t>(piv)]);
  }
  for (index_t k = 0; k < n; ++k) {
    const double xk = x[static_cast<std::size_t>(k)];
    if (xk == 0.0) continue;
    for (index_t i = k + 1; i < n; ++i)
      x[static_cast<std::size_t>(i)] -= f.packed_lu(i, k) * xk;
  }
  for (index_t i = n - 1; i >= 0; --i) {
    double s = x[static_cast<std::size_t>(i)];
    for (index_t j = i + 1; j < n; ++j) s -= f.packed_lu(i, j) * x[static_cast<std::size_t>(j)];
    x[static_cast<std::size_t>(i)] = s / f.packed_lu(i, i);
  }
  return x;
}

namespace {

// Neumaier two-sum update of (sum, comp).
inline void two_sum(double& sum, double& comp, double value) {
  const double t = sum + value;
  if (std::abs(sum) >= std::abs(value))
    comp += (sum - t) + value;
  else
    comp += (value - t) + sum;
  sum = t;
}

}  // namespace

std::vector<double> compensated_residual(const DenseMatrix& a, const std::vector<double>& x,
                                         const std::vector<double>& b) {
  std::vector<double> r(b.size());
  for (index_t i = 0; i < a.nrows; ++i) {
    double sum = 0.0, comp = 0.0;
    for (index_t j = 0; j < a.ncols; ++j) {
      const double aij = a(i, j);
      const double xj = x[static_cast<std::size_t>(j)];
      const double p = aij * xj;
      two_sum(sum, comp, p);
      comp += std::fma(aij, xj, -p);
    }
    two_sum(sum, comp, -b[static_cast<std::size_t>(i)]);
    r[static_cast<std::size_t>(i)] = -(sum + comp);
  }
  return r;
}

std::vector<double> lu_solve_refined(const DenseMatrix& a, const LuFactors& f, const std::vector<double>& b,
                                     int steps) {
  std::vector<double> x = lu_solve(f, b);
  for (int it = 0; it < steps; ++it) {
    const std::vector<double> r = compensated_residual(a, x, b);
    const std::vector<double> d = lu_solve(f, r);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += d[i];
  }
  return x;
}

DenseMatrix lu_solve_matrix(const LuFactors& f, const DenseMatrix& b) {
  if (b.nrows != f.n) throw DimensionMismatch("lu_solve_matrix: row count");
  DenseMatrix x(b.nrows, b.ncols);
  std::vector<double> col(static_cast<std::size_t>(b.nrows));
  for (index_t j = 0; j < b.ncols; ++j) {
    for (index_t i = 0; i < b.nrows; ++i) col[static_cast<std::size_t>(i)] = b(i, j);
    const std::vector<double> sol = lu_solve(f, col);
    for (index_t i = 0; i < b.nrows; ++i) x(i, j) = sol[static_cast<std::size_t>(i)];
  }
  return x;
}

DenseMatrix lu_inverse(const LuFactors& f) { return lu_solve_matrix(f, DenseMatrix::identity(f.n)); }

bool cholesky_pivots_positive(const DenseMatrix& a) {
  if (a.nrows != a.ncols) throw DimensionMismatch("cholesky: matrix not square");
  const index_t n = a.nrows;
  DenseMatrix l(n, n);
  for (index_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (index_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) return false;
    l(j, j) = std::sqrt(d);
    for (index_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (index_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return true;
}

std::vector<double> symmetric_eigenvalues(const DenseMatrix& a, double tol) {
  if (a.nrows != a.ncols) throw DimensionMismatch("symmetric_eigenvalues: matrix not square");
  const index_t n = a.nrows;
  DenseMatrix m = a;
  // Symmetrize once so roundoff asymmetry cannot stall the sweep.
  for (index_t i = 0; i < n; ++i)
    for (index_t j = i + 1; j < n; ++j) {
      const double s = 0.5 * (m(i, j) + m(j, i));
      m(i, j) = s;
      m(j, i) = s;
    }
  double scale = dense_max_abs(m);
  if (scale == 0.0) return std::vector<double>(static_cast<std::size_t>(n), 0.0);

  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (index_t i = 0; i < n; ++i)
      for (index_t j = i + 1; j < n; ++j) off = std::max(off, std::abs(m(i, j)));
    if (off <= tol * scale) break;
    for (index_t p = 0; p < n; ++p) {
      for (index_t q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (index_t k = 0; k < n; ++k) {
          const double akp = m(k, p);
          const double akq = m(k, q);
          m(k, p) = c * akp - s * akq;
          m(k, q) = s * akp + c * akq;
        }
        for (index_t k = 0; k < n; ++k) {
          const double apk = m(p, k);
          const double aqk = m(q, k);
          m(p, k) = c * apk - s * aqk;
          m(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(static_cast<std::size_t>(n));
  for (index_t i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = m(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

}  // namespace hdivred
