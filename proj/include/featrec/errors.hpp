#pragma once

#include <stdexcept>
#include <string>

namespace featrec {

// Base for all featrec failures. Callers that only care about "something
// in the pipeline went wrong" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file (row/column attached to the message).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : Error(what + " (row " + std::to_string(row) + ", column " +
              std::to_string(column) + ")"),
        row_(row),
        column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

// Precondition violated by the caller.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Entropy estimation asked for more dimensions than it supports.
class DimensionLimitError : public Error {
 public:
  using Error::Error;
};

// Features declared missing do not line up with what a model was fit for.
class MaskMismatchError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace featrec
