#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hlsmm {

// Non-finite matrix or vector entries where finite values are required.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Out-of-range parameters or inconsistent shapes.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Solver produced a non-finite quantity.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, std::size_t iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

// Malformed text input. Line numbers are 1-based; 0 means "not line specific".
class IngestionError : public std::runtime_error {
 public:
  IngestionError(const std::string& what, std::size_t line)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Malformed binary container or model file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hlsmm
