#include "hdivred/block_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "hdivred/errors.hpp"

namespace hdivred {

namespace {
const char* kBanner = "%%ElementBlockOperator";
}

void write_block_operator(const std::string& path, const ElementBlockOperator& op) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open '" + path + "' for writing", 0);
  os << kBanner << "\n";
  os << op.blocks.size() << " " << op.broken_dim << " " << op.global_dim << "\n";
  char buf[40];
  for (const auto& blk : op.blocks) {
    const index_t n = static_cast<index_t>(blk.dof_map.size());
    os << n << "\n";
    for (index_t l = 0; l < n; ++l) {
      const SignedDof& d = blk.dof_map[static_cast<std::size_t>(l)];
      const long long signed_id = static_cast<long long>(d.global + 1) * (d.sign < 0.0 ? -1 : 1);
      os << signed_id << (l + 1 == n ? "\n" : " ");
    }
    for (index_t i = 0; i < n; ++i) {
      for (index_t j = 0; j < n; ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", blk.matrix(i, j));
        os << buf << (j + 1 == n ? "\n" : " ");
      }
    }
  }
}

ElementBlockOperator read_block_operator(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open '" + path + "' for reading", 0);
  std::string line;
  long line_no = 0;

  if (!std::getline(is, line)) throw FormatError("empty block file", 1);
  ++line_no;
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
  if (line != kBanner) throw FormatError("bad block file header: '" + line + "'", line_no);

  auto next_line = [&]() -> std::string {
    std::string l;
    while (std::getline(is, l)) {
      ++line_no;
      if (!l.empty() && l[0] != '%') return l;
    }
    throw FormatError("unexpected end of block file", line_no);
  };

  ElementBlockOperator op;
  long long nblocks = 0;
  {
    std::istringstream ss(next_line());
    if (!(ss >> nblocks >> op.broken_dim >> op.global_dim) || nblocks < 0)
      throw FormatError("bad block file size line", line_no);
  }
  op.blocks.resize(static_cast<std::size_t>(nblocks));
  for (auto& blk : op.blocks) {
    index_t n = 0;
    {
      std::istringstream ss(next_line());
      if (!(ss >> n) || n < 0) throw FormatError("bad block dof count", line_no);
    }
    blk.dof_map.resize(static_cast<std::size_t>(n));
    if (n > 0) {
      std::istringstream ss(next_line());
      for (index_t l = 0; l < n; ++l) {
        long long signed_id = 0;
        if (!(ss >> signed_id) || signed_id == 0) throw FormatError("bad signed dof id", line_no);
        blk.dof_map[static_cast<std::size_t>(l)].global = std::llabs(signed_id) - 1;
        blk.dof_map[static_cast<std::size_t>(l)].sign = signed_id < 0 ? -1.0 : 1.0;
        if (blk.dof_map[static_cast<std::size_t>(l)].global >= op.global_dim)
          throw FormatError("dof id exceeds global dimension", line_no);
      }
    }
    blk.matrix = DenseMatrix(n, n);
    for (index_t i = 0; i < n; ++i) {
      std::istringstream ss(next_line());
      for (index_t j = 0; j < n; ++j) {
        if (!(ss >> blk.matrix(i, j))) throw FormatError("bad matrix entry", line_no);
      }
    }
  }
  op.validate();
  return op;
}

}  // namespace hdivred
