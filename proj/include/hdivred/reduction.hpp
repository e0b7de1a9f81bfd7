#ifndef HDIVRED_REDUCTION_HPP
#define HDIVRED_REDUCTION_HPP

#include <utility>
#include <vector>

#include "hdivred/block_operator.hpp"
#include "hdivred/csr.hpp"
#include "hdivred/mesh.hpp"
#include "hdivred/rt_space.hpp"

namespace hdivred {

/// The algebraic triple (A_hat, P, C) plus broken load vector. Satisfies
/// Null(C) = Range(P) and m = n_hat - n for well-formed instances.
struct ReductionInputs {
  ElementBlockOperator a_hat;  // broken-space block-diagonal operator
  CsrMatrix p_mat;             // n_hat x n global-to-local map
  CsrMatrix c_mat;             // m x n_hat constraint matrix
  std::vector<double> f_hat;   // broken load

  /// Global dofs >= this value are element-interior for the static
  /// condensation partition (the FE frontend sets it to the face dof count).
  /// -1 means unknown: condensation falls back to the algebraic partition
  /// (zero columns of C), the one hybridization always uses.
  index_t interior_global_begin = -1;

  index_t n_hat() const { return a_hat.broken_dim; }
  index_t n_global() const { return p_mat.ncols; }
  index_t n_multipliers() const { return c_mat.nrows; }
};

/// Throws ValidationError when dimensions disagree, m != n_hat - n, or
/// C*P != 0 (reports the largest |CP| entry).
void validate_reduction_inputs(const ReductionInputs& inputs, double tol = 1e-13);

CsrMatrix build_P(const RtSpace& space);
CsrMatrix build_C(const RtSpace& space, bool weighted);

ReductionInputs build_reduction_inputs(const RtSpace& space, const CellCoefficients& coeffs,
                                       bool weighted = false,
                                       const std::array<double, 3>& g = {1.0, 1.0, 1.0});

/// Traditional assembly A = P^T A_hat P, f = P^T f_hat.
std::pair<CsrMatrix, std::vector<double>> assemble(const ReductionInputs& inputs);

/// Element-wise factorization data for the multiplier Schur complement
/// H = C A_hat^-1 C^T assembled from C_b S_b^-1 C_b^T per element.
struct HybridizedOperator {
  struct Element {
    std::vector<index_t> i_local;
    std::vector<index_t> b_local;
    DenseMatrix a_ii_mat;                 // raw blocks kept for refined solves
    DenseMatrix s_b_mat;
    LuFactors a_ii;
    DenseMatrix a_ib;
    DenseMatrix a_bi;
    LuFactors s_b;                        // Schur complement A_bb - A_bi A_ii^-1 A_ib
    DenseMatrix c_b;                      // multiplier rows x b dofs
    std::vector<index_t> multiplier_rows; // sorted global multiplier indices
  };
  std::vector<Element> elements;
  std::vector<index_t> block_offsets;
  CsrMatrix h_mat;  // m x m
  CsrMatrix p_mat;  // kept for solution averaging in recovery
  std::vector<double> recovery_scale;   // 1 / diag(P^T P)
  bool diagonal_gram = true;            // P^T P diagonal (signed-injection P)
};

std::pair<HybridizedOperator, std::vector<double>> hybridize(const ReductionInputs& inputs);

/// x_hat = A_hat^-1 (f_hat - C^T lambda) element-wise, then x = (P^T P)^-1 P^T x_hat.
std::pair<std::vector<double>, std::vector<double>> recover_hybrid(const HybridizedOperator& op,
                                                                   const std::vector<double>& lambda,
                                                                   const std::vector<double>& f_hat);

/// Statically condensed operator S = P_b^T S_hat P_b on the master dofs.
struct CondensedOperator {
  struct Element {
    std::vector<index_t> i_local;
    std::vector<index_t> b_local;
    DenseMatrix a_ii_mat;
    LuFactors a_ii;
    DenseMatrix a_ib;
    // per b dof: the (master ordinal, weight) entries of its P row; one
    // signed entry for conforming spaces, several for imported W_sm maps
    std::vector<std::vector<SignedDof>> b_master;
    std::vector<SignedDof> i_global;  // per i dof: (global index, weight), single entry
  };
  std::vector<Element> elements;
  std::vector<index_t> block_offsets;
  CsrMatrix s_mat;                     // n_master x n_master
  std::vector<index_t> master_globals; // sorted global ids of the master dofs
  index_t n_global = 0;
};

std::pair<CondensedOperator, std::vector<double>> static_condense(const ReductionInputs& inputs);

/// Interior back substitution x_i = A_ii^-1 (f_i - A_ib x_b); returns the
/// full global solution.
std::vector<double> recover_condensed(const CondensedOperator& op, const std::vector<double>& x_b,
                                      const std::vector<double>& f_hat);

struct EssentialBc {
  index_t face = 0;
  double normal_flux = 0.0;  // prescribed with the global +axis normal
};

struct EliminationResult {
  ReductionInputs inputs;
  std::vector<index_t> kept_globals;  // old global ids surviving elimination
  std::vector<double> prescribed;     // full-length values, nonzero only at eliminated dofs
};

/// Removes the face dofs of the listed boundary faces from the element
/// blocks and P (C columns there are already zero); the rhs absorbs
/// prescribed nonzero fluxes. For k >= 1 the prescribed value applies to the
/// face-average dof, higher moments are prescribed zero.
EliminationResult eliminate_essential(const RtSpace& space, const ReductionInputs& inputs,
                                      const std::vector<EssentialBc>& bcs);

/// Scatters a reduced solution back to full length, inserting the prescribed values.
std::vector<double> expand_eliminated(const EliminationResult& elim, const std::vector<double>& reduced,
                                      index_t full_n);

/// Sorted eigenvalues of C Y_hat C^T with
/// Y_hat = M^-1 - M^-1 B^T (B M^-1 B^T)^-1 B M^-1 built per element.
std::vector<double> near_nullspace_check(const RtSpace& space, const CellCoefficients& coeffs,
                                         bool weighted = false, index_t dense_cap = kDefaultDenseCap);

}  // namespace hdivred

#endif
