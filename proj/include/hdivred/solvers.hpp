#ifndef HDIVRED_SOLVERS_HPP
#define HDIVRED_SOLVERS_HPP

#include <memory>
#include <vector>

#include "hdivred/csr.hpp"
#include "hdivred/dense.hpp"

namespace hdivred {

struct PcgReport {
  index_t iterations = 0;
  std::vector<double> relative_residuals;  // l2, entry 0 is the initial residual
  bool converged = false;
  double wall_time = 0.0;  // seconds
};

class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  virtual index_t size() const = 0;
  virtual void apply(const std::vector<double>& r, std::vector<double>& z) const = 0;
};

/// Standard preconditioned conjugate gradients from x0 = 0; stops when
/// ||b - Ax||_2 <= rtol ||b||_2 (recursive residual) or maxit. A NotConverged
/// outcome is reported through the flag, not an exception.
std::pair<std::vector<double>, PcgReport> pcg(const CsrMatrix& a, const Preconditioner* precond,
                                              const std::vector<double>& b, double rtol, index_t maxit);

std::unique_ptr<Preconditioner> jacobi_setup(const CsrMatrix& a);
/// One forward + one backward Gauss-Seidel sweep (symmetric as an operator).
std::unique_ptr<Preconditioner> ssgs_setup(const CsrMatrix& a);

/// Direct solution through the dense LU path; oracle use only.
std::vector<double> dense_solve(const CsrMatrix& a, const std::vector<double>& b,
                                index_t dense_cap = kDefaultDenseCap);
std::vector<double> dense_solve(const DenseMatrix& a, const std::vector<double>& b);

/// In-place Gauss-Seidel sweeps on A z = r (shared by SGS and the AMG cycle).
void gauss_seidel_forward(const CsrMatrix& a, const std::vector<double>& r, std::vector<double>& z);
void gauss_seidel_backward(const CsrMatrix& a, const std::vector<double>& r, std::vector<double>& z);

}  // namespace hdivred

#endif
