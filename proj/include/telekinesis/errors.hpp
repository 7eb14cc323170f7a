#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tk {

// Base of every error raised by the library. Anything not covered by a
// narrower subclass is a runtime failure (exit code 4 at the CLI).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad flags or arguments (exit code 2).
class UsageError : public Error {
 public:
  using Error::Error;
};

// Input that violates a documented invariant (exit code 3).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class CalibrationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A frame arrived with a timestamp that is not the next tick.
class FrameOrderError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// MS_error == 0, so F is undefined.
class DegenerateDataError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace tk
