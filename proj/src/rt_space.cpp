#include "hdivred/rt_space.hpp"

#include <cmath>
#include <stdexcept>

#include "hdivred/errors.hpp"

namespace hdivred {

void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.resize(static_cast<std::size_t>(n));
  weights.resize(static_cast<std::size_t>(n));
  // Newton iteration on P_n over [-1,1], then map to [0,1].
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      if (n == 1) p1 = x;
      for (int m = 2; m <= n; ++m) {
        const double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / static_cast<double>(m);
        p0 = p1;
        p1 = p2;
      }
      const double pn = (n == 1) ? p1 : p1;
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[static_cast<std::size_t>(n - 1 - i)] = 0.5 * (x + 1.0);
    weights[static_cast<std::size_t>(n - 1 - i)] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
}

double legendre01(int m, double s) {
  const double t = 2.0 * s - 1.0;
  double p0 = 1.0, p1 = t;
  if (m == 0) return 1.0;
  for (int i = 2; i <= m; ++i) {
    const double p2 = ((2.0 * i - 1.0) * t * p1 - (i - 1.0) * p0) / static_cast<double>(i);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

double legendre01_deriv(int m, double s) {
  if (m == 0) return 0.0;
  const double t = 2.0 * s - 1.0;
  if (m == 1) return 2.0;
  // d/ds = 2 d/dt; P'_m via (t^2-1) P'_m = m (t P_m - P_{m-1})
  double p0 = 1.0, p1 = t;
  for (int i = 2; i <= m; ++i) {
    const double p2 = ((2.0 * i - 1.0) * t * p1 - (i - 1.0) * p0) / static_cast<double>(i);
    p0 = p1;
    p1 = p2;
  }
  if (std::abs(t * t - 1.0) < 1e-12) {
    // endpoint limit: P'_m(+-1) = (+-1)^{m-1} m(m+1)/2
    const double sign = (t > 0.0) ? 1.0 : ((m % 2 == 1) ? 1.0 : -1.0);
    return 2.0 * sign * 0.5 * m * (m + 1.0);
  }
  return 2.0 * static_cast<double>(m) * (t * p1 - p0) / (t * t - 1.0);
}

namespace {

// One monomial of the RT_k polynomial space: a vector field that is nonzero
// in a single component, a tensor product of shifted Legendre factors in
// x_a / h_a.
struct SpacePoly {
  int comp = 0;
  std::array<int, 3> deg{0, 0, 0};
};

std::vector<SpacePoly> space_polys(int dim, int k) {
  std::vector<SpacePoly> out;
  for (int c = 0; c < dim; ++c) {
    std::array<int, 3> lim{0, 0, 0};
    for (int a = 0; a < dim; ++a) lim[static_cast<std::size_t>(a)] = (a == c) ? k + 1 : k;
    for (int dz = 0; dz <= lim[2]; ++dz)
      for (int dy = 0; dy <= lim[1]; ++dy)
        for (int dx = 0; dx <= lim[0]; ++dx) out.push_back({c, {dx, dy, dz}});
  }
  return out;
}

// Interior dof moments: component c against Q_{k-1} in x_c and Q_k in the
// other axes. Empty for k = 0.
std::vector<SpacePoly> interior_moments(int dim, int k) {
  std::vector<SpacePoly> out;
  if (k == 0) return out;
  for (int c = 0; c < dim; ++c) {
    std::array<int, 3> lim{0, 0, 0};
    for (int a = 0; a < dim; ++a) lim[static_cast<std::size_t>(a)] = (a == c) ? k - 1 : k;
    for (int dz = 0; dz <= lim[2]; ++dz)
      for (int dy = 0; dy <= lim[1]; ++dy)
        for (int dx = 0; dx <= lim[0]; ++dx) out.push_back({c, {dx, dy, dz}});
  }
  return out;
}

std::vector<std::array<int, 3>> pressure_polys(int dim, int k) {
  std::vector<std::array<int, 3>> out;
  const int lz = (dim == 3) ? k : 0;
  for (int dz = 0; dz <= lz; ++dz)
    for (int dy = 0; dy <= k; ++dy)
      for (int dx = 0; dx <= k; ++dx) out.push_back({dx, dy, dz});
  return out;
}

// Tangent axes of a face slot in ascending global order.
std::vector<int> tangent_axes(int dim, int axis) {
  std::vector<int> t;
  for (int a = 0; a < dim; ++a)
    if (a != axis) t.push_back(a);
  return t;
}

// integral over [0,1] of L_p * L_q
double legendre_pair_integral(int p, int q) { return (p == q) ? 1.0 / (2.0 * p + 1.0) : 0.0; }

// Moment weights are L2-normalized so the dual basis stays well scaled; the
// zeroth moment keeps the plain face-average convention.
double moment_weight(int m) { return std::sqrt(2.0 * m + 1.0); }

// Face moment index decomposed along the tangent axes, first axis fastest.
std::array<int, 2> face_moment_degrees(int k, int dim, index_t sub) {
  if (dim == 2) return {static_cast<int>(sub), 0};
  return {static_cast<int>(sub % (k + 1)), static_cast<int>(sub / (k + 1))};
}

// Local dof functionals applied to the space monomials; geometry drops out
// of the scaled moments, so the Vandermonde depends only on (dim, k).
DenseMatrix dof_vandermonde(int dim, int k, const std::vector<SpacePoly>& polys,
                            const std::vector<SpacePoly>& interior, index_t dofs_per_face) {
  const index_t n = static_cast<index_t>(polys.size());
  const index_t n_int = static_cast<index_t>(interior.size());
  DenseMatrix v(n, n);

  for (index_t j = 0; j < n; ++j) {
    const SpacePoly& t = polys[static_cast<std::size_t>(j)];
    // interior dofs
    for (index_t i = 0; i < n_int; ++i) {
      const SpacePoly& m = interior[static_cast<std::size_t>(i)];
      if (m.comp != t.comp) continue;
      double val = 1.0;
      for (int a = 0; a < dim; ++a)
        val *= legendre_pair_integral(t.deg[static_cast<std::size_t>(a)], m.deg[static_cast<std::size_t>(a)]) *
               moment_weight(m.deg[static_cast<std::size_t>(a)]);
      v(i, j) = val;
    }
    // face dofs: slots (-x,+x,-y,+y[,-z,+z]), element-outward normal
    for (int slot = 0; slot < 2 * dim; ++slot) {
      const int axis = slot / 2;
      const int side = slot % 2;
      if (t.comp != axis) continue;
      const double normal_sign = side ? 1.0 : -1.0;
      const double trace = legendre01(t.deg[static_cast<std::size_t>(axis)], side ? 1.0 : 0.0);
      const auto tang = tangent_axes(dim, axis);
      for (index_t sub = 0; sub < dofs_per_face; ++sub) {
        const auto md = face_moment_degrees(k, dim, sub);
        double val = normal_sign * trace;
        for (std::size_t ti = 0; ti < tang.size(); ++ti)
          val *= legendre_pair_integral(t.deg[static_cast<std::size_t>(tang[ti])], md[ti]) * moment_weight(md[ti]);
        v(n_int + slot * dofs_per_face + sub, j) = val;
      }
    }
  }
  return v;
}

struct RefData {
  DenseMatrix divdiv, mass, div_form, pressure_mass;
  std::array<std::vector<double>, 3> unit_load;
  std::vector<DenseMatrix> face_moments;
};

RefData build_reference(int dim, int k, const std::array<double, 3>& h, int nq) {
  const auto polys = space_polys(dim, k);
  const auto interior = interior_moments(dim, k);
  const auto press = pressure_polys(dim, k);
  const index_t dofs_per_face = static_cast<index_t>(std::llround(std::pow(k + 1, dim - 1)));
  const index_t n = static_cast<index_t>(polys.size());
  const index_t npr = static_cast<index_t>(press.size());

  const DenseMatrix vand = dof_vandermonde(dim, k, polys, interior, dofs_per_face);
  const DenseMatrix phi = lu_inverse(lu_factor(vand));  // column j = coefficients of basis j

  std::vector<double> qs, qw;
  gauss_legendre_01(nq, qs, qw);

  RefData ref;
  ref.divdiv = DenseMatrix(n, n);
  ref.mass = DenseMatrix(n, n);
  ref.div_form = DenseMatrix(npr, n);
  ref.pressure_mass = DenseMatrix(npr, npr);
  for (int c = 0; c < 3; ++c) ref.unit_load[static_cast<std::size_t>(c)].assign(static_cast<std::size_t>(n), 0.0);

  std::vector<double> poly_val(static_cast<std::size_t>(n));
  std::vector<double> poly_div(static_cast<std::size_t>(n));
  std::vector<std::array<double, 3>> basis_val(static_cast<std::size_t>(n));
  std::vector<double> basis_div(static_cast<std::size_t>(n));
  std::vector<double> press_val(static_cast<std::size_t>(npr));

  const int nqz = (dim == 3) ? nq : 1;
  for (int iz = 0; iz < nqz; ++iz) {
    for (int iy = 0; iy < nq; ++iy) {
      for (int ix = 0; ix < nq; ++ix) {
        const std::array<double, 3> s{qs[static_cast<std::size_t>(ix)], qs[static_cast<std::size_t>(iy)],
                                      (dim == 3) ? qs[static_cast<std::size_t>(iz)] : 0.0};
        double w = qw[static_cast<std::size_t>(ix)] * h[0] * qw[static_cast<std::size_t>(iy)] * h[1];
        if (dim == 3) w *= qw[static_cast<std::size_t>(iz)] * h[2];

        for (index_t q = 0; q < n; ++q) {
          const SpacePoly& t = polys[static_cast<std::size_t>(q)];
          double val = 1.0;
          for (int a = 0; a < dim; ++a) val *= legendre01(t.deg[static_cast<std::size_t>(a)], s[static_cast<std::size_t>(a)]);
          poly_val[static_cast<std::size_t>(q)] = val;
          double dv = legendre01_deriv(t.deg[static_cast<std::size_t>(t.comp)], s[static_cast<std::size_t>(t.comp)]) /
                      h[static_cast<std::size_t>(t.comp)];
          for (int a = 0; a < dim; ++a)
            if (a != t.comp) dv *= legendre01(t.deg[static_cast<std::size_t>(a)], s[static_cast<std::size_t>(a)]);
          poly_div[static_cast<std::size_t>(q)] = dv;
        }
        for (index_t j = 0; j < n; ++j) {
          basis_val[static_cast<std::size_t>(j)] = {0.0, 0.0, 0.0};
          double dsum = 0.0;
          for (index_t q = 0; q < n; ++q) {
            const double c = phi(q, j);
            if (c == 0.0) continue;
            basis_val[static_cast<std::size_t>(j)][static_cast<std::size_t>(polys[static_cast<std::size_t>(q)].comp)] +=
                c * poly_val[static_cast<std::size_t>(q)];
            dsum += c * poly_div[static_cast<std::size_t>(q)];
          }
          basis_div[static_cast<std::size_t>(j)] = dsum;
        }
        for (index_t r = 0; r < npr; ++r) {
          const auto& d = press[static_cast<std::size_t>(r)];
          double val = 1.0;
          for (int a = 0; a < dim; ++a) val *= legendre01(d[static_cast<std::size_t>(a)], s[static_cast<std::size_t>(a)]);
          press_val[static_cast<std::size_t>(r)] = val;
        }

        for (index_t i = 0; i < n; ++i) {
          const double dvi = basis_div[static_cast<std::size_t>(i)];
          const auto& vi = basis_val[static_cast<std::size_t>(i)];
          for (index_t j = 0; j < n; ++j) {
            ref.divdiv(i, j) += w * dvi * basis_div[static_cast<std::size_t>(j)];
            const auto& vj = basis_val[static_cast<std::size_t>(j)];
            ref.mass(i, j) += w * (vi[0] * vj[0] + vi[1] * vj[1] + vi[2] * vj[2]);
          }
          for (int c = 0; c < dim; ++c)
            ref.unit_load[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] += w * vi[static_cast<std::size_t>(c)];
        }
        for (index_t r = 0; r < npr; ++r)
          for (index_t j = 0; j < n; ++j)
            ref.div_form(r, j) += w * press_val[static_cast<std::size_t>(r)] * basis_div[static_cast<std::size_t>(j)];
        for (index_t r = 0; r < npr; ++r)
          for (index_t sidx = 0; sidx < npr; ++sidx)
            ref.pressure_mass(r, sidx) += w * press_val[static_cast<std::size_t>(r)] * press_val[static_cast<std::size_t>(sidx)];
      }
    }
  }

  // Face moment integrals for the mass-weighted constraint rows.
  ref.face_moments.resize(static_cast<std::size_t>(2 * dim));
  for (int slot = 0; slot < 2 * dim; ++slot) {
    const int axis = slot / 2;
    const int side = slot % 2;
    const double normal_sign = side ? 1.0 : -1.0;
    const auto tang = tangent_axes(dim, axis);
    DenseMatrix fm(dofs_per_face, n);

    const int nt1 = nq;
    const int nt2 = (dim == 3) ? nq : 1;
    for (int i2 = 0; i2 < nt2; ++i2) {
      for (int i1 = 0; i1 < nt1; ++i1) {
        std::array<double, 3> s{0.0, 0.0, 0.0};
        s[static_cast<std::size_t>(axis)] = side ? 1.0 : 0.0;
        s[static_cast<std::size_t>(tang[0])] = qs[static_cast<std::size_t>(i1)];
        double w = qw[static_cast<std::size_t>(i1)] * h[static_cast<std::size_t>(tang[0])];
        if (dim == 3) {
          s[static_cast<std::size_t>(tang[1])] = qs[static_cast<std::size_t>(i2)];
          w *= qw[static_cast<std::size_t>(i2)] * h[static_cast<std::size_t>(tang[1])];
        }
        for (index_t q = 0; q < n; ++q) {
          const SpacePoly& t = polys[static_cast<std::size_t>(q)];
          double val = 1.0;
          for (int a = 0; a < dim; ++a) val *= legendre01(t.deg[static_cast<std::size_t>(a)], s[static_cast<std::size_t>(a)]);
          poly_val[static_cast<std::size_t>(q)] = val;
        }
        for (index_t j = 0; j < n; ++j) {
          double normal_trace = 0.0;
          for (index_t q = 0; q < n; ++q) {
            if (polys[static_cast<std::size_t>(q)].comp != axis) continue;
            normal_trace += phi(q, j) * poly_val[static_cast<std::size_t>(q)];
          }
          normal_trace *= normal_sign;
          if (normal_trace == 0.0) continue;
          for (index_t sub = 0; sub < dofs_per_face; ++sub) {
            const auto md = face_moment_degrees(k, dim, sub);
            double qv = legendre01(md[0], s[static_cast<std::size_t>(tang[0])]) * moment_weight(md[0]);
            if (dim == 3) qv *= legendre01(md[1], s[static_cast<std::size_t>(tang[1])]) * moment_weight(md[1]);
            fm(sub, j) += w * normal_trace * qv;
          }
        }
      }
    }
    ref.face_moments[static_cast<std::size_t>(slot)] = std::move(fm);
  }
  return ref;
}

}  // namespace

RtSpace build_space(const CartesianMesh& mesh, int order) {
  if (order != 0 && order != 1) throw std::invalid_argument("build_space: order must be 0 or 1");
  RtSpace sp;
  sp.mesh = mesh;
  sp.order = order;
  const int dim = mesh.dim;
  const int k = order;
  sp.dofs_per_face = static_cast<index_t>(std::llround(std::pow(k + 1, dim - 1)));
  sp.interior_dofs_per_cell = static_cast<index_t>(dim * k) * sp.dofs_per_face;
  sp.pressure_dofs_per_cell = static_cast<index_t>(std::llround(std::pow(k + 1, dim)));
  sp.element_ndofs = 2 * dim * sp.dofs_per_face + sp.interior_dofs_per_cell;
  sp.face_dof_count = mesh.nfaces() * sp.dofs_per_face;
  sp.ndofs = sp.face_dof_count + mesh.ncells() * sp.interior_dofs_per_cell;
  sp.broken_ndofs = mesh.ncells() * sp.element_ndofs;

  RefData ref = build_reference(dim, k, mesh.cell_sizes, k + 2);
  sp.ref_divdiv = std::move(ref.divdiv);
  sp.ref_mass = std::move(ref.mass);
  sp.ref_div_form = std::move(ref.div_form);
  sp.ref_pressure_mass = std::move(ref.pressure_mass);
  sp.ref_unit_load = std::move(ref.unit_load);
  sp.ref_face_moments = std::move(ref.face_moments);
  return sp;
}

namespace {

ElementMatrices assemble_from_reference(const RtSpace& space, index_t cell, const CellCoefficients& coeffs,
                                        const std::array<double, 3>& g, const DenseMatrix& divdiv,
                                        const DenseMatrix& mass, const DenseMatrix& div_form,
                                        const DenseMatrix& pressure_mass,
                                        const std::array<std::vector<double>, 3>& unit_load) {
  if (cell < 0 || cell >= space.mesh.ncells()) throw std::out_of_range("element_matrices: cell out of range");
  const double alpha = coeffs.alpha[static_cast<std::size_t>(cell)];
  const double beta = coeffs.beta[static_cast<std::size_t>(cell)];
  if (!(alpha > 0.0) || !(beta > 0.0)) throw std::invalid_argument("element_matrices: coefficients must be positive");

  ElementMatrices em;
  em.a_mat = dense_add(DenseMatrix(divdiv.nrows, divdiv.ncols), divdiv, alpha);
  em.a_mat = dense_add(em.a_mat, mass, beta);
  em.m_mat = dense_add(DenseMatrix(mass.nrows, mass.ncols), mass, beta);
  em.b_mat = div_form;
  em.w_mat = dense_add(DenseMatrix(pressure_mass.nrows, pressure_mass.ncols), pressure_mass, 1.0 / alpha);
  em.load.assign(static_cast<std::size_t>(divdiv.nrows), 0.0);
  for (int c = 0; c < space.mesh.dim; ++c)
    for (std::size_t i = 0; i < em.load.size(); ++i)
      em.load[i] += g[static_cast<std::size_t>(c)] * unit_load[static_cast<std::size_t>(c)][i];
  return em;
}

}  // namespace

ElementMatrices element_matrices(const RtSpace& space, index_t cell, const CellCoefficients& coeffs,
                                 const std::array<double, 3>& g) {
  return assemble_from_reference(space, cell, coeffs, g, space.ref_divdiv, space.ref_mass, space.ref_div_form,
                                 space.ref_pressure_mass, space.ref_unit_load);
}

ElementMatrices element_matrices_quadrature(const RtSpace& space, index_t cell, const CellCoefficients& coeffs,
                                            const std::array<double, 3>& g, int quad_points) {
  const RefData ref = build_reference(space.mesh.dim, space.order, space.mesh.cell_sizes, quad_points);
  return assemble_from_reference(space, cell, coeffs, g, ref.divdiv, ref.mass, ref.div_form, ref.pressure_mass,
                                 ref.unit_load);
}

std::vector<SignedDof> local_dof_map(const RtSpace& space, index_t cell) {
  if (cell < 0 || cell >= space.mesh.ncells()) throw std::out_of_range("local_dof_map: cell out of range");
  std::vector<SignedDof> map;
  map.reserve(static_cast<std::size_t>(space.element_ndofs));
  for (index_t l = 0; l < space.interior_dofs_per_cell; ++l)
    map.push_back({space.face_dof_count + cell * space.interior_dofs_per_cell + l, 1.0});
  for (const auto& [face, sign] : space.mesh.cell_faces(cell))
    for (index_t sub = 0; sub < space.dofs_per_face; ++sub)
      map.push_back({face * space.dofs_per_face + sub, sign});
  return map;
}

}  // namespace hdivred
