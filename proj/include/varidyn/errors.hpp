#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace varidyn {

/// Base class of every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. Carries the byte offset of the offending token.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " (at offset " + std::to_string(position) + ")"),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_ = 0;
};

/// Evaluation outside the mathematical domain: division by zero, log of a
/// nonpositive value, a velocity outside the admissible cone, a kinetic
/// tensor losing definiteness, and similar.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Mismatched vector/matrix sizes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Structurally degenerate input (zero velocity for a homogeneous
/// Lagrangian, an orbit with no extent, ...).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Base for scalar root-solve failures.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Bracket expansion found no sign change.
class NoBracketError : public SolverError {
 public:
  using SolverError::SolverError;
};

/// Iteration budget exhausted before reaching the requested tolerance.
class NonConvergenceError : public SolverError {
 public:
  using SolverError::SolverError;
};

/// Adaptive quadrature hit its subdivision cap above tolerance.
class QuadratureError : public Error {
 public:
  using Error::Error;
};

/// Mass matrix (velocity Hessian) not invertible where a solve is required.
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

/// Orbit sampling too coarse for the requested quadrature accuracy.
class UndersampledError : public Error {
 public:
  using Error::Error;
};

/// A stage of a multi-stage verification failed. Carries the stage label so
/// a failure deep inside a constituent operation names the edge it broke.
class EdgeError : public Error {
 public:
  EdgeError(const std::string& stage, const std::string& what)
      : Error(stage + ": " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Scenario file fails schema validation. Carries a JSON-pointer-style path.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace varidyn
