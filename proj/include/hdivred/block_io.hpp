#ifndef HDIVRED_BLOCK_IO_HPP
#define HDIVRED_BLOCK_IO_HPP

#include <string>

#include "hdivred/block_operator.hpp"

namespace hdivred {

/// Plain-text element block file:
///   %%ElementBlockOperator
///   nblocks broken_dim global_dim
/// then per block: the dof count, one line of signed 1-based global dof ids
/// (the sign carries the orientation), and the dense entries row-major with
/// 17 significant digits.
void write_block_operator(const std::string& path, const ElementBlockOperator& op);
ElementBlockOperator read_block_operator(const std::string& path);

}  // namespace hdivred

#endif
