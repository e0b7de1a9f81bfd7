#ifndef HDIVRED_REFERENCE_HPP
#define HDIVRED_REFERENCE_HPP

#include <vector>

#include "hdivred/reduction.hpp"

namespace hdivred {

/// Extended-precision reference solutions of the three reduction paths,
/// computed from the same floating-point inputs the production code sees.
/// The paths agree to far below working precision when the reduction algebra
/// is correct, so comparisons between them are meaningful even on instances
/// whose double-precision conditioning exceeds 1/eps.
struct ReferencePaths {
  std::vector<double> assembled;    // x from P^T A_hat P x = P^T f_hat
  std::vector<double> hybridized;   // x recovered through H lambda = C A^-1 f
  std::vector<double> condensed;    // x recovered through S x_b = f_S
  std::vector<double> x_hat;        // broken solution from the hybrid path
  std::vector<double> lambda;       // multiplier solution
  DenseMatrix h_dense;              // multiplier Schur complement, extended-precision formed

  // Diagnostics accumulated in extended precision:
  double equivalence_error = 0.0;   // ||x_hat - P x||_inf / ||x_hat||_inf
  double constraint_residual = 0.0; // ||C x_hat||_inf / ||x_hat||_inf
  double primal_residual = 0.0;     // ||P^T (A_hat x_hat + C^T lambda - f_hat)||_inf / ||f_hat||_inf
  double energy_error = 0.0;        // |x^T A x - x_hat^T A_hat x_hat| / |x^T A x| with x_hat = P x
  double master_error = 0.0;        // ||x_condensed - x_assembled||_inf / ||x||_inf
};

ReferencePaths reference_paths(const ReductionInputs& inputs, index_t dense_cap = kDefaultDenseCap);

}  // namespace hdivred

#endif
