#ifndef HDIVRED_RT_SPACE_HPP
#define HDIVRED_RT_SPACE_HPP

#include <array>
#include <vector>

#include "hdivred/block_operator.hpp"
#include "hdivred/dense.hpp"
#include "hdivred/mesh.hpp"

namespace hdivred {

/// Element matrices of the weighted H(div) form in the local (element-
/// outward) dof basis, interior dofs first, then face dofs in cell_faces
/// order with tensor-ordered sub-dofs per face.
struct ElementMatrices {
  DenseMatrix a_mat;        // (alpha div u, div v) + (beta u, v)
  DenseMatrix m_mat;        // (beta u, v)
  DenseMatrix b_mat;        // (div u, pi_r), one row per local pressure basis function
  DenseMatrix w_mat;        // (alpha^-1 pi_r, pi_s)
  std::vector<double> load; // (g, v)
};

/// Raviart-Thomas dof enumeration over a Cartesian mesh, orders k in {0,1}.
/// Global numbering: face dofs grouped by face index, then interior dofs
/// grouped by cell. Face dofs are scaled normal-flux moments (the first one
/// is the face-averaged flux) against shifted Legendre polynomials in the
/// global tangential coordinates, taken with the +axis normal.
struct RtSpace {
  CartesianMesh mesh;
  int order = 0;
  index_t dofs_per_face = 1;
  index_t interior_dofs_per_cell = 0;
  index_t pressure_dofs_per_cell = 1;
  index_t element_ndofs = 0;
  index_t face_dof_count = 0;
  index_t ndofs = 0;
  index_t broken_ndofs = 0;

  // Reference data on the [0,hx]x[0,hy]x[0,hz] box; every cell is congruent,
  // so one set serves the whole mesh. Forms are unweighted; coefficients are
  // folded in per cell.
  DenseMatrix ref_divdiv;
  DenseMatrix ref_mass;
  DenseMatrix ref_div_form;
  DenseMatrix ref_pressure_mass;
  std::array<std::vector<double>, 3> ref_unit_load;
  // Per local face slot: integral of (phi_j . n_out) against the face moment
  // basis, dofs_per_face x element_ndofs. Feeds the mass-weighted constraint.
  std::vector<DenseMatrix> ref_face_moments;
};

RtSpace build_space(const CartesianMesh& mesh, int order);

ElementMatrices element_matrices(const RtSpace& space, index_t cell, const CellCoefficients& coeffs,
                                 const std::array<double, 3>& g = {1.0, 1.0, 1.0});

/// Same matrices recomputed from scratch with an explicit quadrature point
/// count per axis (refined-quadrature oracle support).
ElementMatrices element_matrices_quadrature(const RtSpace& space, index_t cell,
                                            const CellCoefficients& coeffs,
                                            const std::array<double, 3>& g, int quad_points);

/// Local-to-global map in the local dof order; face dofs carry the cell's
/// outward sign for their face, interior dofs sign +1.
std::vector<SignedDof> local_dof_map(const RtSpace& space, index_t cell);

/// Gauss-Legendre nodes and weights on [0,1].
void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Shifted Legendre polynomial L_m on [0,1] and its derivative.
double legendre01(int m, double s);
double legendre01_deriv(int m, double s);

}  // namespace hdivred

#endif
