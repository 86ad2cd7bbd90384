#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace prr {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Evaluation outside a function's domain (log of non-positive, x / 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A theorem hypothesis does not hold at the query point.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

// Iterative solver failed (non-contracting recurrence, unbounded u, ...).
class SolverError : public Error {
 public:
  using Error::Error;
};

// Malformed spec / model / report input.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Process model produced something it should not (depth guard, bad child).
class ModelError : public Error {
 public:
  using Error::Error;
};

}  // namespace prr
