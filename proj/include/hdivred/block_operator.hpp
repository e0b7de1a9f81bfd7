#ifndef HDIVRED_BLOCK_OPERATOR_HPP
#define HDIVRED_BLOCK_OPERATOR_HPP

#include <vector>

#include "hdivred/csr.hpp"
#include "hdivred/dense.hpp"

namespace hdivred {

/// One local dof of an element block: its global (conforming) index and the
/// +-1 orientation sign reconciling the element-outward local convention with
/// the global one.
struct SignedDof {
  index_t global = 0;
  double sign = 1.0;
};

/// Block-diagonal operator A_hat = blockdiag(A_tau) over the broken space.
/// Broken indices are contiguous per block, in block order; the dof maps carry
/// the global scatter information that P encodes as a matrix.
struct ElementBlockOperator {
  struct Block {
    std::vector<SignedDof> dof_map;
    DenseMatrix matrix;  // square, size = dof_map.size()
  };

  std::vector<Block> blocks;
  index_t broken_dim = 0;  // n_hat = sum of block sizes
  index_t global_dim = 0;  // n, the conforming dof count

  index_t block_offset(std::size_t b) const {
    index_t off = 0;
    for (std::size_t i = 0; i < b; ++i) off += static_cast<index_t>(blocks[i].dof_map.size());
    return off;
  }
  void validate() const;
};

/// Broken-space expansion blockdiag(A_tau), contiguous per-block numbering.
/// The dof-map signs do not enter here; they belong to the global scatter.
DenseMatrix to_dense(const ElementBlockOperator& op, index_t dense_cap = kDefaultDenseCap);
CsrMatrix block_diagonal_csr(const ElementBlockOperator& op);

/// Global assembly through the dof maps: A[g_i, g_j] += s_i * s_j * B[i, j].
/// Equals triple_product(transpose(P), op, P) when P matches the dof maps.
CsrMatrix scatter_assemble(const ElementBlockOperator& op);

/// R * blockdiag(A_tau) * P, expanded block by block over the broken indices.
CsrMatrix triple_product(const CsrMatrix& r, const ElementBlockOperator& op, const CsrMatrix& p);

std::vector<double> block_apply(const ElementBlockOperator& op, const std::vector<double>& x_broken);

}  // namespace hdivred

#endif
