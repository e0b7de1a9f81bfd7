#include "hdivred/solvers.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "hdivred/errors.hpp"

namespace hdivred {

namespace {

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void check_symmetric(const CsrMatrix& a) {
  if (a.nrows != a.ncols) throw std::invalid_argument("pcg: matrix not square");
  const double diff = max_abs_difference(a, transpose(a));
  if (diff > 1e-10 * std::max(1e-300, max_abs(a)))
    throw std::invalid_argument("pcg: matrix not symmetric, max |A - A^T| = " + std::to_string(diff));
}

std::vector<double> positive_inv_diag(const CsrMatrix& a) {
  std::vector<double> d(static_cast<std::size_t>(a.nrows), 0.0);
  for (index_t i = 0; i < a.nrows; ++i) {
    auto cols = a.row_cols(i);
    auto vals = a.row_vals(i);
    for (std::size_t k = 0; k < cols.size(); ++k)
      if (cols[k] == i) d[static_cast<std::size_t>(i)] = vals[k];
    if (!(d[static_cast<std::size_t>(i)] > 0.0))
      throw ZeroDiagonal("non-positive diagonal entry at row " + std::to_string(i));
    d[static_cast<std::size_t>(i)] = 1.0 / d[static_cast<std::size_t>(i)];
  }
  return d;
}

class JacobiPreconditioner final : public Preconditioner {
 public:
  explicit JacobiPreconditioner(const CsrMatrix& a) : inv_diag_(positive_inv_diag(a)) {}
  index_t size() const override { return static_cast<index_t>(inv_diag_.size()); }
  void apply(const std::vector<double>& r, std::vector<double>& z) const override {
    z.resize(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = inv_diag_[i] * r[i];
  }

 private:
  std::vector<double> inv_diag_;
};

class SgsPreconditioner final : public Preconditioner {
 public:
  explicit SgsPreconditioner(const CsrMatrix& a) : a_(a) { positive_inv_diag(a); }
  index_t size() const override { return a_.nrows; }
  void apply(const std::vector<double>& r, std::vector<double>& z) const override {
    z.assign(r.size(), 0.0);
    gauss_seidel_forward(a_, r, z);
    gauss_seidel_backward(a_, r, z);
  }

 private:
  CsrMatrix a_;
};

}  // namespace

void gauss_seidel_forward(const CsrMatrix& a, const std::vector<double>& r, std::vector<double>& z) {
  for (index_t i = 0; i < a.nrows; ++i) {
    auto cols = a.row_cols(i);
    auto vals = a.row_vals(i);
    double s = r[static_cast<std::size_t>(i)];
    double diag = 0.0;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (cols[k] == i)
        diag = vals[k];
      else
        s -= vals[k] * z[static_cast<std::size_t>(cols[k])];
    }
    if (diag == 0.0) throw ZeroDiagonal("gauss_seidel: zero diagonal at row " + std::to_string(i));
    z[static_cast<std::size_t>(i)] = s / diag;
  }
}

void gauss_seidel_backward(const CsrMatrix& a, const std::vector<double>& r, std::vector<double>& z) {
  for (index_t i = a.nrows - 1; i >= 0; --i) {
    auto cols = a.row_cols(i);
    auto vals = a.row_vals(i);
    double s = r[static_cast<std::size_t>(i)];
    double diag = 0.0;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (cols[k] == i)
        diag = vals[k];
      else
        s -= vals[k] * z[static_cast<std::size_t>(cols[k])];
    }
    if (diag == 0.0) throw ZeroDiagonal("gauss_seidel: zero diagonal at row " + std::to_string(i));
    z[static_cast<std::size_t>(i)] = s / diag;
  }
}

std::pair<std::vector<double>, PcgReport> pcg(const CsrMatrix& a, const Preconditioner* precond,
                                              const std::vector<double>& b, double rtol, index_t maxit) {
  check_symmetric(a);
  if (static_cast<index_t>(b.size()) != a.nrows) throw DimensionMismatch("pcg: rhs length");
  if (precond && precond->size() != a.nrows) throw DimensionMismatch("pcg: preconditioner size");

  const auto t0 = std::chrono::steady_clock::now();
  PcgReport report;
  std::vector<double> x(b.size(), 0.0);
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    report.relative_residuals.push_back(0.0);
    report.converged = true;
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(x), std::move(report)};
  }

  std::vector<double> r = b;
  std::vector<double> z;
  if (precond)
    precond->apply(r, z);
  else
    z = r;
  std::vector<double> p = z;
  double rz = dot(r, z);
  if (rz <= 0.0) throw IndefinitePreconditioner("pcg: <z, r> <= 0 at setup");
  report.relative_residuals.push_back(1.0);

  for (index_t it = 1; it <= maxit; ++it) {
    const std::vector<double> q = spmv(a, p);
    const double pq = dot(p, q);
    if (pq <= 0.0) throw ValidationError("pcg: <p, Ap> <= 0, matrix is not positive definite");
    const double alpha = rz / pq;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += alpha * p[i];
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= alpha * q[i];
    const double rel = norm2(r) / bnorm;
    report.relative_residuals.push_back(rel);
    report.iterations = it;
    if (rel <= rtol) {
      report.converged = true;
      break;
    }
    if (precond)
      precond->apply(r, z);
    else
      z = r;
    const double rz_new = dot(r, z);
    if (rz_new <= 0.0) throw IndefinitePreconditioner("pcg: <z, r> <= 0 at iteration " + std::to_string(it));
    const double beta = rz_new / rz;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
    rz = rz_new;
  }
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(x), std::move(report)};
}

std::unique_ptr<Preconditioner> jacobi_setup(const CsrMatrix& a) {
  return std::make_unique<JacobiPreconditioner>(a);
}

std::unique_ptr<Preconditioner> ssgs_setup(const CsrMatrix& a) { return std::make_unique<SgsPreconditioner>(a); }

std::vector<double> dense_solve(const CsrMatrix& a, const std::vector<double>& b, index_t dense_cap) {
  if (static_cast<index_t>(b.size()) != a.nrows) throw DimensionMismatch("dense_solve: rhs length");
  DenseMatrix ad = to_dense(a, dense_cap);

  // Symmetric Jacobi equilibration when the diagonal allows it; keeps the
  // oracle accurate under large coefficient jumps.
  std::vector<double> scale(static_cast<std::size_t>(a.nrows), 1.0);
  bool can_scale = a.nrows == a.ncols;
  for (index_t i = 0; can_scale && i < a.nrows; ++i) can_scale = ad(i, i) > 0.0;
  if (can_scale) {
    for (index_t i = 0; i < a.nrows; ++i) scale[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(ad(i, i));
    for (index_t i = 0; i < a.nrows; ++i)
      for (index_t j = 0; j < a.ncols; ++j) ad(i, j) *= scale[static_cast<std::size_t>(i)] * scale[static_cast<std::size_t>(j)];
  }
  const LuFactors f = lu_factor(ad);
  std::vector<double> rhs = b;
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] *= scale[i];
  std::vector<double> y = lu_solve_refined(ad, f, rhs);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= scale[i];
  return y;
}

std::vector<double> dense_solve(const DenseMatrix& a, const std::vector<double>& b) {
  return lu_solve(lu_factor(a), b);
}

}  // namespace hdivred
