#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dpdlasso {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NonFinite : public Error {
 public:
  using Error::Error;
};

class ConstantColumn : public Error {
 public:
  explicit ConstantColumn(std::size_t column)
      : Error("column " + std::to_string(column) + " has zero variance"), column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

class InvalidSigma : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class BadK : public Error {
 public:
  using Error::Error;
};

class BadRho : public Error {
 public:
  using Error::Error;
};

class BadCounts : public Error {
 public:
  using Error::Error;
};

class BadFraction : public Error {
 public:
  using Error::Error;
};

class DegenerateSignal : public Error {
 public:
  using Error::Error;
};

class BadGrid : public Error {
 public:
  using Error::Error;
};

/// Malformed input files (CSV, JSON, config).
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace dpdlasso
