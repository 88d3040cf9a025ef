#pragma once

#include <stdexcept>
#include <string>

namespace phidiss {

enum class ErrorKind {
  MalformedSpec,
  InsufficientData,
  NumericFailure,
  Shape,
  Precondition,
  UnsupportedRegime,
  Parse,
  Schema,
  InvariantViolation,
  EmptyDomain,
  Index,
  Config,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedSpec: return "malformed-spec";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::NumericFailure: return "numeric-failure";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::UnsupportedRegime: return "unsupported-regime";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::InvariantViolation: return "invariant-violation";
    case ErrorKind::EmptyDomain: return "empty-domain";
    case ErrorKind::Index: return "index";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

/// Single exception type for the library; `kind()` tells callers which
/// contract was broken.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Root finder gave up; carries the last bracket.
class NumericFailure : public Error {
 public:
  NumericFailure(const std::string& what, double lo, double hi)
      : Error(ErrorKind::NumericFailure, what), lo_(lo), hi_(hi) {}

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

/// Text input error with 1-based line/column.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(ErrorKind::Parse, what + " (line " + std::to_string(line) + ", column " +
                                    std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace phidiss
