#include "hdivred/matrix_market.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hdivred/errors.hpp"

namespace hdivred {

namespace {

const char* kHeader = "%%MatrixMarket matrix coordinate real general";

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open '" + path + "' for writing", 0);
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open '" + path + "' for reading", 0);
  return is;
}

}  // namespace

void write_matrix_market(std::ostream& os, const CsrMatrix& a) {
  os << kHeader << "\n";
  os << a.nrows << " " << a.ncols << " " << a.nnz() << "\n";
  for (index_t i = 0; i < a.nrows; ++i) {
    auto cols = a.row_cols(i);
    auto vals = a.row_vals(i);
    for (std::size_t k = 0; k < cols.size(); ++k)
      os << (i + 1) << " " << (cols[k] + 1) << " " << format_value(vals[k]) << "\n";
  }
}

void write_matrix_market(const std::string& path, const CsrMatrix& a) {
  auto os = open_out(path);
  write_matrix_market(os, a);
}

CsrMatrix read_matrix_market(std::istream& is) {
  std::string line;
  long line_no = 0;
  if (!std::getline(is, line)) throw FormatError("empty file", 1);
  ++line_no;
  // Tolerate trailing whitespace/CR in the banner.
  std::string banner = line;
  while (!banner.empty() && std::isspace(static_cast<unsigned char>(banner.back()))) banner.pop_back();
  if (banner != kHeader) throw FormatError("bad MatrixMarket header: '" + line + "'", line_no);

  index_t nrows = -1, ncols = -1, nnz = -1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line[0] == '%') continue;
    std::istringstream ss(line);
    if (!(ss >> nrows >> ncols >> nnz)) throw FormatError("bad size line", line_no);
    break;
  }
  if (nrows < 0 || ncols < 0 || nnz < 0) throw FormatError("missing size line", line_no);

  std::vector<index_t> rows, cols;
  std::vector<double> vals;
  rows.reserve(static_cast<std::size_t>(nnz));
  cols.reserve(static_cast<std::size_t>(nnz));
  vals.reserve(static_cast<std::size_t>(nnz));
  index_t seen = 0;
  while (seen < nnz) {
    if (!std::getline(is, line)) throw FormatError("unexpected end of file: expected " + std::to_string(nnz) + " entries", line_no);
    ++line_no;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream ss(line);
    index_t i, j;
    double v;
    if (!(ss >> i >> j >> v)) throw FormatError("bad entry line", line_no);
    if (i < 1 || i > nrows || j < 1 || j > ncols) throw FormatError("entry index out of range", line_no);
    rows.push_back(i - 1);
    cols.push_back(j - 1);
    vals.push_back(v);
    ++seen;
  }
  return CsrMatrix::from_triplets(nrows, ncols, rows, cols, vals);
}

CsrMatrix read_matrix_market(const std::string& path) {
  auto is = open_in(path);
  return read_matrix_market(is);
}

void write_vector_market(const std::string& path, const std::vector<double>& v) {
  CsrMatrix m(static_cast<index_t>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 0.0) {
      m.row_offsets[i + 1] = m.row_offsets[i];
      continue;
    }
    m.col_indices.push_back(0);
    m.values.push_back(v[i]);
    m.row_offsets[i + 1] = static_cast<index_t>(m.values.size());
  }
  write_matrix_market(path, m);
}

std::vector<double> read_vector_market(const std::string& path) {
  const CsrMatrix m = read_matrix_market(path);
  if (m.ncols != 1) throw FormatError("expected an n-by-1 vector in '" + path + "'", 0);
  std::vector<double> v(static_cast<std::size_t>(m.nrows), 0.0);
  for (index_t i = 0; i < m.nrows; ++i) {
    auto vals = m.row_vals(i);
    if (!vals.empty()) v[static_cast<std::size_t>(i)] = vals[0];
  }
  return v;
}

void write_vector_lines(const std::string& path, const std::vector<double>& v) {
  auto os = open_out(path);
  for (double x : v) os << format_value(x) << "\n";
}

std::vector<double> read_vector_lines(const std::string& path) {
  auto is = open_in(path);
  std::vector<double> v;
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    double x;
    if (!(ss >> x)) throw FormatError("bad vector line", line_no);
    v.push_back(x);
  }
  return v;
}

}  // namespace hdivred
