#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace detlab {

/// An enumeration, DP range, or factorization budget was exceeded.  The CLI
/// maps this family to exit code 3.
class ResourceCapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EnumerationCapError : public ResourceCapError {
 public:
  using ResourceCapError::ResourceCapError;
};

class RangeCapError : public ResourceCapError {
 public:
  using ResourceCapError::ResourceCapError;
};

/// Factoring ran out of budget before the cofactor was fully split.  Raised
/// instead of ever returning a partial answer as if it were complete.
class PartialFactorizationError : public ResourceCapError {
 public:
  using ResourceCapError::ResourceCapError;
};

class NotPrimeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed matrix file; carries 1-based line/column for diagnostics.
class MatrixParseError : public std::runtime_error {
 public:
  MatrixParseError(std::size_t line, std::size_t column, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ", column " +
                           std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace detlab
