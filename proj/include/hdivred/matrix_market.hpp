#ifndef HDIVRED_MATRIX_MARKET_HPP
#define HDIVRED_MATRIX_MARKET_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "hdivred/csr.hpp"

namespace hdivred {

/// Matrix Market coordinate format, real general, 1-based indices.
/// Entries are written row-major sorted with 17 significant digits so that
/// write/read round-trips are bit exact.
void write_matrix_market(std::ostream& os, const CsrMatrix& a);
void write_matrix_market(const std::string& path, const CsrMatrix& a);
CsrMatrix read_matrix_market(std::istream& is);
CsrMatrix read_matrix_market(const std::string& path);

/// Vectors travel as n-by-1 coordinate matrices through the same format.
void write_vector_market(const std::string& path, const std::vector<double>& v);
std::vector<double> read_vector_market(const std::string& path);

/// Plain-text vector, one value per line (solution files).
void write_vector_lines(const std::string& path, const std::vector<double>& v);
std::vector<double> read_vector_lines(const std::string& path);

}  // namespace hdivred

#endif
