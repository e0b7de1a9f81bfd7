#ifndef HDIVRED_VERIFY_HPP
#define HDIVRED_VERIFY_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "hdivred/reduction.hpp"

namespace hdivred {

struct VerifyCheck {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// One verification instance: a unit-cube mesh with the soft-hard coefficient
/// preset. All checks run against dense oracles.
struct VerifyInstance {
  index_t cells_per_axis = 2;
  int order = 0;
  int p = 0;
  bool weighted = false;
};

std::string instance_label(const VerifyInstance& inst);

/// The dense-oracle identity suite for a single instance:
///   cp_zero, h_dense_oracle, equivalence (x_hat = P x), saddle_residuals,
///   interface_schur_identity, three_field_identity, energy_identity,
///   master_agreement, near_nullspace_dim.
std::vector<VerifyCheck> verify_instance(const VerifyInstance& inst);

/// The interface-Schur identity H = [-W, I] S_hat^-1 [-W, I]^T with W = -I,
/// checked against a caller-supplied H (unweighted constraints). Exposed
/// separately so fault-injection tests can perturb H.
VerifyCheck check_interface_schur_identity(const ReductionInputs& inputs, const CsrMatrix& h_mat,
                                           double tol = 1e-10);

/// The three-field identity: H equals the multiplier Schur complement of
/// [[M, B^T, C^T], [B, -W, 0], [C, 0, 0]] built densely per element. The
/// caller supplies the H to compare (production or reference).
VerifyCheck check_three_field_identity(const RtSpace& space, const CellCoefficients& coeffs,
                                       const ReductionInputs& inputs, const CsrMatrix& h_mat,
                                       double tol = 1e-10);

/// Same identity in its self-contained form: both H = C A^-1 C^T (with
/// A composed as B^T W^-1 B + M per element) and the three-field Schur
/// complement are built from the identical element data.
VerifyCheck check_three_field_identity_composed(const RtSpace& space, const CellCoefficients& coeffs,
                                                const ReductionInputs& inputs, double tol = 1e-10);

enum class VerifyLevel { fast, full };

/// Runs the suite, printing one line per check; returns true when all pass.
bool run_verify(VerifyLevel level, std::ostream& report);

}  // namespace hdivred

#endif
