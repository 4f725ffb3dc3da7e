// Exception hierarchy shared by every abcd module.
#ifndef ABCD_ERRORS_HPP
#define ABCD_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace abcd {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand dimensions are incompatible.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A parameter lies outside its documented range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input outside the mathematical domain of an operation (e.g. zero-height box
// fed to an aspect-ratio term).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Non-finite or otherwise unusable raw input.
class InputError : public Error {
 public:
  using Error::Error;
};

class EvaluationError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Text input that failed to parse. line() is 1-based; 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A parsed record violates a value contract (e.g. score outside [0,1]).
class ValidationError : public ParseError {
 public:
  using ParseError::ParseError;
};

}  // namespace abcd

#endif  // ABCD_ERRORS_HPP
