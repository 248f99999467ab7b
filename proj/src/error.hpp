#pragma once

#include <stdexcept>
#include <string>

namespace qtomo {

/// Failure classes raised by the core library. The C API maps each one onto a
/// stable status code.
enum class ErrorCode {
  InvalidArgument,
  NonHermitianInput,
  DimensionMismatch,
  InvalidState,
  NumericalDrift,
  DegenerateParams,
  FactorizationFailure,
  NonFiniteObjective,
  GridMismatch,
  NoConvergence,
  EmptyWindow,
  ParseError,
  SchemaError,
  IoError,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised while reading a record file; carries a 1-based location.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(ErrorCode::ParseError,
              what + " (line " + std::to_string(line) + ", column " +
                  std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

/// Raised when a loaded document violates a schema invariant. `field` names
/// the violated invariant ("times", "sigmas", "normalization", ...).
class SchemaError : public Error {
 public:
  SchemaError(std::string field, const std::string& what)
      : Error(ErrorCode::SchemaError, field + ": " + what),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace qtomo
