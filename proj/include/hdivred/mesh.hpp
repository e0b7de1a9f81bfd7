#ifndef HDIVRED_MESH_HPP
#define HDIVRED_MESH_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "hdivred/dense.hpp"

namespace hdivred {

/// Oriented mesh face. The global face normal always points along +axis; a
/// face is shared by minus_cell (lower coordinate side) and plus_cell.
struct Face {
  int axis = 0;
  std::optional<index_t> minus_cell;
  std::optional<index_t> plus_cell;
  bool is_boundary = false;
  double area = 0.0;
};

/// Axis-aligned structured mesh of quadrilaterals (dim 2) or hexahedra
/// (dim 3). Cells are numbered lexicographically with x fastest; faces are
/// grouped by axis, lexicographic within the group.
struct CartesianMesh {
  int dim = 3;
  std::array<index_t, 3> ncells_per_axis{1, 1, 1};  // nz = 1 in 2D
  std::array<double, 3> cell_sizes{1.0, 1.0, 1.0};
  std::array<double, 3> origin{0.0, 0.0, 0.0};

  index_t ncells() const;
  index_t nfaces() const;
  /// Number of faces whose normal is along the given axis.
  index_t nfaces_axis(int axis) const;
  /// First face index of the given axis group.
  index_t face_axis_offset(int axis) const;

  index_t cell_index(const std::array<index_t, 3>& c) const;
  std::array<index_t, 3> cell_coords(index_t cell) const;
  std::array<double, 3> cell_center(index_t cell) const;
  double cell_volume() const;
  double face_area(int axis) const;

  Face face(index_t f) const;
  /// The 2*dim faces of a cell in (-x,+x,-y,+y[,-z,+z]) order with the
  /// outward sign: +1 when the global +axis normal points out of this cell.
  std::vector<std::pair<index_t, double>> cell_faces(index_t cell) const;
};

CartesianMesh build_mesh(int dim, const std::array<index_t, 3>& counts,
                         const std::array<double, 3>& sizes,
                         const std::array<double, 3>& origin = {0.0, 0.0, 0.0});

/// Per-cell positive coefficients of the weighted H(div) form.
struct CellCoefficients {
  std::vector<double> alpha;
  std::vector<double> beta;
};

CellCoefficients uniform_coefficients(const CartesianMesh& mesh, double alpha, double beta);

/// Soft-hard materials preset on the unit cube: alpha = 1 everywhere,
/// beta = 10^p for cells whose centers lie in [1/4,1/2]^d u [1/2,3/4]^d,
/// beta = 1 elsewhere. Exponents outside {-8,-4,0,4,8} are allowed but warned.
CellCoefficients soft_hard_coefficients(const CartesianMesh& mesh, int p);

/// Plain-text per-cell file: one line "cell_index alpha beta", lexicographic
/// cell order required.
CellCoefficients read_coefficient_file(const CartesianMesh& mesh, const std::string& path);
void write_coefficient_file(const std::string& path, const CellCoefficients& coeffs);

}  // namespace hdivred

#endif
