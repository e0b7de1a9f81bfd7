#ifndef HDIVRED_ERRORS_HPP
#define HDIVRED_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hdivred {

struct DimensionMismatch : std::runtime_error {
  explicit DimensionMismatch(const std::string& what) : std::runtime_error(what) {}
};

/// A pivot of an element block (or of the dense direct solver) fell below
/// the singularity threshold 1e-14 * max|A|.
struct SingularBlock : std::runtime_error {
  explicit SingularBlock(const std::string& what) : std::runtime_error(what) {}
};

/// A dense expansion was requested beyond the configured entry cap.
struct CapExceeded : std::runtime_error {
  explicit CapExceeded(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input file; carries the 1-based line number.
struct FormatError : std::runtime_error {
  FormatError(const std::string& what, long line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_number(line) {}
  long line_number;
};

struct ZeroDiagonal : std::runtime_error {
  explicit ZeroDiagonal(const std::string& what) : std::runtime_error(what) {}
};

struct IndefinitePreconditioner : std::runtime_error {
  explicit IndefinitePreconditioner(const std::string& what) : std::runtime_error(what) {}
};

struct SetupFailed : std::runtime_error {
  explicit SetupFailed(const std::string& what) : std::runtime_error(what) {}
};

/// Imported inputs violated a structural invariant (e.g. C*P != 0).
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hdivred

#endif
