#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sqvm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed database document or CSV input.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Table or column definitions that violate the catalog rules.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// API misuse: wrong statement state, closed cursor, bad index.
class UsageError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Unknown table, column or function referenced by a query.
class BindError : public Error {
 public:
  using Error::Error;
};

class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t offset, const std::string &expected)
      : Error("syntax error at offset " + std::to_string(offset) + ": expected " + expected),
        offset_(offset),
        expected_(expected) {}

  std::size_t offset() const { return offset_; }
  const std::string &expected() const { return expected_; }

 private:
  std::size_t offset_;
  std::string expected_;
};

}  // namespace sqvm
