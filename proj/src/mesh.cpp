#include "hdivred/mesh.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "hdivred/errors.hpp"

namespace hdivred {

index_t CartesianMesh::ncells() const {
  return ncells_per_axis[0] * ncells_per_axis[1] * ncells_per_axis[2];
}

index_t CartesianMesh::nfaces_axis(int axis) const {
  index_t n = ncells_per_axis[static_cast<std::size_t>(axis)] + 1;
  for (int a = 0; a < dim; ++a)
    if (a != axis) n *= ncells_per_axis[static_cast<std::size_t>(a)];
  return n;
}

index_t CartesianMesh::nfaces() const {
  index_t n = 0;
  for (int a = 0; a < dim; ++a) n += nfaces_axis(a);
  return n;
}

index_t CartesianMesh::face_axis_offset(int axis) const {
  index_t off = 0;
  for (int a = 0; a < axis; ++a) off += nfaces_axis(a);
  return off;
}

index_t CartesianMesh::cell_index(const std::array<index_t, 3>& c) const {
  return c[0] + ncells_per_axis[0] * (c[1] + ncells_per_axis[1] * c[2]);
}

std::array<index_t, 3> CartesianMesh::cell_coords(index_t cell) const {
  std::array<index_t, 3> c;
  c[0] = cell % ncells_per_axis[0];
  cell /= ncells_per_axis[0];
  c[1] = cell % ncells_per_axis[1];
  c[2] = cell / ncells_per_axis[1];
  return c;
}

std::array<double, 3> CartesianMesh::cell_center(index_t cell) const {
  const auto c = cell_coords(cell);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a)
    x[static_cast<std::size_t>(a)] =
        origin[static_cast<std::size_t>(a)] + (static_cast<double>(c[static_cast<std::size_t>(a)]) + 0.5) * cell_sizes[static_cast<std::size_t>(a)];
  return x;
}

double CartesianMesh::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim; ++a) v *= cell_sizes[static_cast<std::size_t>(a)];
  return v;
}

double CartesianMesh::face_area(int axis) const {
  double area = 1.0;
  for (int a = 0; a < dim; ++a)
    if (a != axis) area *= cell_sizes[static_cast<std::size_t>(a)];
  return area;
}

namespace {

// Decompose a within-axis face index into coordinates, x fastest; the axis'
// own dimension runs over ncells+1 planes.
std::array<index_t, 3> face_coords(const CartesianMesh& m, int axis, index_t local) {
  std::array<index_t, 3> dims{m.ncells_per_axis[0], m.ncells_per_axis[1], m.ncells_per_axis[2]};
  dims[static_cast<std::size_t>(axis)] += 1;
  std::array<index_t, 3> c;
  c[0] = local % dims[0];
  local /= dims[0];
  c[1] = local % dims[1];
  c[2] = local / dims[1];
  return c;
}

index_t face_linear(const CartesianMesh& m, int axis, const std::array<index_t, 3>& c) {
  std::array<index_t, 3> dims{m.ncells_per_axis[0], m.ncells_per_axis[1], m.ncells_per_axis[2]};
  dims[static_cast<std::size_t>(axis)] += 1;
  return m.face_axis_offset(axis) + c[0] + dims[0] * (c[1] + dims[1] * c[2]);
}

}  // namespace

Face CartesianMesh::face(index_t f) const {
  if (f < 0 || f >= nfaces()) throw std::out_of_range("face index out of range");
  int axis = 0;
  index_t local = f;
  while (local >= nfaces_axis(axis)) {
    local -= nfaces_axis(axis);
    ++axis;
  }
  const auto c = face_coords(*this, axis, local);
  const index_t plane = c[static_cast<std::size_t>(axis)];

  Face out;
  out.axis = axis;
  out.area = face_area(axis);
  if (plane > 0) {
    auto cm = c;
    cm[static_cast<std::size_t>(axis)] = plane - 1;
    out.minus_cell = cell_index(cm);
  }
  if (plane < ncells_per_axis[static_cast<std::size_t>(axis)]) {
    auto cp = c;
    cp[static_cast<std::size_t>(axis)] = plane;
    out.plus_cell = cell_index(cp);
  }
  out.is_boundary = !(out.minus_cell && out.plus_cell);
  return out;
}

std::vector<std::pair<index_t, double>> CartesianMesh::cell_faces(index_t cell) const {
  if (cell < 0 || cell >= ncells()) throw std::out_of_range("cell index out of range");
  const auto c = cell_coords(cell);
  std::vector<std::pair<index_t, double>> out;
  out.reserve(static_cast<std::size_t>(2 * dim));
  for (int a = 0; a < dim; ++a) {
    auto lo = c;
    auto hi = c;
    hi[static_cast<std::size_t>(a)] += 1;
    out.emplace_back(face_linear(*this, a, lo), -1.0);
    out.emplace_back(face_linear(*this, a, hi), +1.0);
  }
  return out;
}

CartesianMesh build_mesh(int dim, const std::array<index_t, 3>& counts,
                         const std::array<double, 3>& sizes,
                         const std::array<double, 3>& origin) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("build_mesh: dim must be 2 or 3");
  CartesianMesh m;
  m.dim = dim;
  m.ncells_per_axis = counts;
  m.cell_sizes = sizes;
  m.origin = origin;
  if (dim == 2) {
    m.ncells_per_axis[2] = 1;
    m.cell_sizes[2] = 1.0;
    m.origin[2] = 0.0;
  }
  for (int a = 0; a < dim; ++a) {
    if (m.ncells_per_axis[static_cast<std::size_t>(a)] < 1)
      throw std::invalid_argument("build_mesh: cell counts must be >= 1");
    if (!(m.cell_sizes[static_cast<std::size_t>(a)] > 0.0))
      throw std::invalid_argument("build_mesh: cell sizes must be > 0");
  }
  return m;
}

CellCoefficients uniform_coefficients(const CartesianMesh& mesh, double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw std::invalid_argument("coefficients must be positive");
  CellCoefficients c;
  c.alpha.assign(static_cast<std::size_t>(mesh.ncells()), alpha);
  c.beta.assign(static_cast<std::size_t>(mesh.ncells()), beta);
  return c;
}

CellCoefficients soft_hard_coefficients(const CartesianMesh& mesh, int p) {
  for (int a = 0; a < mesh.dim; ++a) {
    const double extent = static_cast<double>(mesh.ncells_per_axis[static_cast<std::size_t>(a)]) *
                          mesh.cell_sizes[static_cast<std::size_t>(a)];
    if (std::abs(mesh.origin[static_cast<std::size_t>(a)]) > 1e-12 || std::abs(extent - 1.0) > 1e-12)
      throw std::invalid_argument("soft_hard_coefficients: mesh must span the unit cube");
  }
  if (p != -8 && p != -4 && p != 0 && p != 4 && p != 8)
    std::cerr << "warning: soft-hard exponent p=" << p << " is outside the swept set {-8,-4,0,4,8}\n";

  const double jump = std::pow(10.0, p);
  CellCoefficients c = uniform_coefficients(mesh, 1.0, 1.0);
  for (index_t cell = 0; cell < mesh.ncells(); ++cell) {
    const auto x = mesh.cell_center(cell);
    bool in_lo = true, in_hi = true;
    for (int a = 0; a < mesh.dim; ++a) {
      const double t = x[static_cast<std::size_t>(a)];
      in_lo = in_lo && (t >= 0.25 && t <= 0.5);
      in_hi = in_hi && (t >= 0.5 && t <= 0.75);
    }
    if (in_lo || in_hi) c.beta[static_cast<std::size_t>(cell)] = jump;
  }
  return c;
}

CellCoefficients read_coefficient_file(const CartesianMesh& mesh, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open coefficient file '" + path + "'", 0);
  CellCoefficients c;
  c.alpha.resize(static_cast<std::size_t>(mesh.ncells()));
  c.beta.resize(static_cast<std::size_t>(mesh.ncells()));
  std::string line;
  long line_no = 0;
  index_t expected = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    index_t cell;
    double a, b;
    if (!(ss >> cell >> a >> b)) throw FormatError("bad coefficient line", line_no);
    if (cell != expected) throw FormatError("coefficient lines must be in lexicographic cell order", line_no);
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
      throw FormatError("coefficients must be positive and finite", line_no);
    c.alpha[static_cast<std::size_t>(cell)] = a;
    c.beta[static_cast<std::size_t>(cell)] = b;
    ++expected;
  }
  if (expected != mesh.ncells())
    throw FormatError("coefficient file has " + std::to_string(expected) + " cells, mesh has " +
                          std::to_string(mesh.ncells()),
                      line_no);
  return c;
}

void write_coefficient_file(const std::string& path, const CellCoefficients& coeffs) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open coefficient file '" + path + "' for writing", 0);
  char buf[96];
  for (std::size_t i = 0; i < coeffs.alpha.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%lld %.17g %.17g\n", static_cast<long long>(i), coeffs.alpha[i], coeffs.beta[i]);
    os << buf;
  }
}

}  // namespace hdivred
