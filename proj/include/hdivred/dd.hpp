#ifndef HDIVRED_DD_HPP
#define HDIVRED_DD_HPP

#include <cmath>
#include <vector>

#include "hdivred/dense.hpp"

namespace hdivred {

/// Double-double scalar (~31 significant digits). Used by the reference
/// solution paths so equivalence checks are not limited by the working
/// precision of the production pipeline.
struct Dd {
  double hi = 0.0;
  double lo = 0.0;

  Dd() = default;
  Dd(double h) : hi(h) {}  // NOLINT(google-explicit-constructor)
  Dd(double h, double l) : hi(h), lo(l) {}

  double value() const { return hi + lo; }
};

namespace dd_detail {
inline Dd two_sum(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  return {s, (a - (s - bb)) + (b - bb)};
}
inline Dd quick_two_sum(double a, double b) {
  const double s = a + b;
  return {s, b - (s - a)};
}
inline Dd two_prod(double a, double b) {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}
}  // namespace dd_detail

inline Dd operator+(const Dd& x, const Dd& y) {
  Dd s = dd_detail::two_sum(x.hi, y.hi);
  s.lo += x.lo + y.lo;
  return dd_detail::quick_two_sum(s.hi, s.lo);
}

inline Dd operator-(const Dd& x) { return {-x.hi, -x.lo}; }
inline Dd operator-(const Dd& x, const Dd& y) { return x + (-y); }

inline Dd operator*(const Dd& x, const Dd& y) {
  Dd p = dd_detail::two_prod(x.hi, y.hi);
  p.lo += x.hi * y.lo + x.lo * y.hi;
  return dd_detail::quick_two_sum(p.hi, p.lo);
}

inline Dd operator/(const Dd& x, const Dd& y) {
  const double q1 = x.hi / y.hi;
  Dd r = x - Dd(q1) * y;
  const double q2 = r.hi / y.hi;
  r = r - Dd(q2) * y;
  const double q3 = r.hi / y.hi;
  Dd q = dd_detail::quick_two_sum(q1, q2);
  return q + Dd(q3);
}

inline Dd& operator+=(Dd& x, const Dd& y) { return x = x + y; }
inline Dd& operator-=(Dd& x, const Dd& y) { return x = x - y; }
inline double abs_hi(const Dd& x) { return std::abs(x.hi); }

/// Row-major dense matrix over Dd.
struct DdMatrix {
  index_t nrows = 0;
  index_t ncols = 0;
  std::vector<Dd> entries;

  DdMatrix() = default;
  DdMatrix(index_t rows, index_t cols) : nrows(rows), ncols(cols), entries(static_cast<std::size_t>(rows * cols)) {}
  Dd& operator()(index_t i, index_t j) { return entries[static_cast<std::size_t>(i * ncols + j)]; }
  const Dd& operator()(index_t i, index_t j) const { return entries[static_cast<std::size_t>(i * ncols + j)]; }
};

/// In-place LU with partial pivoting; throws SingularBlock on a zero pivot.
void dd_lu_factor(DdMatrix& a, std::vector<index_t>& pivots);
std::vector<Dd> dd_lu_solve(const DdMatrix& lu, const std::vector<index_t>& pivots, std::vector<Dd> b);

}  // namespace hdivred

#endif
