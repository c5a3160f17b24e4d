#pragma once

#include <stdexcept>
#include <string>

namespace tvselect {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user-supplied configuration (degree, knot count, grid, fold count, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The data cannot support the requested construction (too few distinct
/// times for quantile knots, zero-variance or zero-norm columns).
class DegenerateDesignError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Row numbers are 1-based data rows (header excluded).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long row = -1, std::string column = {})
      : Error(what), row_(row), column_(std::move(column)) {}
  long row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  long row_;
  std::string column_;
};

class SingularBlockError : public Error {
 public:
  using Error::Error;
};

class OracleNonconvergenceError : public Error {
 public:
  using Error::Error;
};

class TuningError : public Error {
 public:
  using Error::Error;
};

/// A fit artifact does not match the data it is applied to.
class ArtifactMismatchError : public Error {
 public:
  using Error::Error;
};

class StudyError : public Error {
 public:
  using Error::Error;
};

}  // namespace tvselect
