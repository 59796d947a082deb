#pragma once

#include <stdexcept>
#include <string>

namespace homlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class InvalidPartition : public Error {
 public:
  using Error::Error;
};

class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// An indicator's formula has a vanishing denominator (or 0/0) on this table.
class UndefinedIndicator : public Error {
 public:
  using Error::Error;
};

class UndefinedWeight : public Error {
 public:
  using Error::Error;
};

class ResourceGuard : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// The requested counterfactual would need a negative cell (or cannot exist).
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, long row = -1, long col = -1, double value = 0.0)
      : Error(what), row_(row), col_(col), value_(value) {}
  long row() const { return row_; }
  long col() const { return col_; }
  double value() const { return value_; }

 private:
  long row_;
  long col_;
  double value_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line = 0) : Error(what), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, long line = 0) : Error(what), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

}  // namespace homlab
