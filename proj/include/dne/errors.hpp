#pragma once

#include <stdexcept>
#include <string>

namespace dne {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input text (case files, config files, trajectory CSV).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(what) {}
};

/// Structurally well-formed input that violates a model invariant.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(what) {}
};

/// A declared infeasibility finding (forecast not coverable, trajectory
/// without feasible corrective dispatch). Not a solver malfunction.
class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& what) : Error(what) {}
};

/// Solver failure: iteration caps, node limits, numerical breakdown.
class SolveError : public Error {
 public:
  explicit SolveError(const std::string& what) : Error(what) {}
};

}  // namespace dne
