#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace metaq {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unknown class / relationship, ill-typed view, ill-typed join.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A path-expression step names an attribute absent from the step's type.
class PathError : public Error {
 public:
  using Error::Error;
};

// An operation restricted to the described-query fragment got something else.
class FragmentError : public Error {
 public:
  using Error::Error;
};

class EvalError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(format(what, line, column)), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line, std::size_t column) {
    return std::to_string(line) + ":" + std::to_string(column) + ": " + what;
  }

  std::size_t line_;
  std::size_t column_;
};

}  // namespace metaq
