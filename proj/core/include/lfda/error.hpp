#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lfda {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input from the caller or from a data file: shapes, labels, parse failures.
class InputError : public Error {
 public:
  using Error::Error;
};

/// The numerics could not produce a usable answer from otherwise valid input.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public InputError {
 public:
  using InputError::InputError;
};

class SymmetryError : public InputError {
 public:
  using InputError::InputError;
};

class LabelError : public InputError {
 public:
  using InputError::InputError;
};

class EmptyInputError : public InputError {
 public:
  using InputError::InputError;
};

class StratificationError : public InputError {
 public:
  using InputError::InputError;
};

class InsufficientDataError : public InputError {
 public:
  using InputError::InputError;
};

class MissingReferenceError : public InputError {
 public:
  using InputError::InputError;
};

class FormatError : public InputError {
 public:
  using InputError::InputError;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateDataError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoDiscriminationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace lfda
