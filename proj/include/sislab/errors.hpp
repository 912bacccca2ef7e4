#pragma once

#include <stdexcept>
#include <string>

namespace sislab {

// Base for all recoverable failures raised by this library. Callers that
// want a single catch site can catch Error; everything below refines it.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Model parameters violate their admissibility constraints.
struct InvalidParams : Error {
  using Error::Error;
};

// An operation that requires sigma > 0 was invoked on a deterministic model.
struct SigmaZero : Error {
  using Error::Error;
};

// Argument outside the mathematical domain of the requested quantity.
struct DomainError : Error {
  using Error::Error;
};

// The invariant density does not exist (stochastic reproduction number <= 1).
struct NotNormalizable : Error {
  using Error::Error;
};

// A documented precondition of the operation does not hold for these inputs.
struct PreconditionFailed : Error {
  using Error::Error;
};

// Requested SDE time step exceeds the stability guard for these parameters.
struct StepTooLarge : Error {
  using Error::Error;
};

// Grid specification is unusable (too coarse, or point outside the domain).
struct InvalidGrid : Error {
  using Error::Error;
};

// Linear solve hit a non-positive pivot; the discrete operator is broken.
struct SingularSystem : Error {
  using Error::Error;
};

// Iteration budget exhausted before reaching the requested tolerance.
struct NotConverged : Error {
  using Error::Error;
};

// Adaptive integration could not certify the requested accuracy.
struct QuadratureFailure : Error {
  using Error::Error;
};

// Boundary probes ran out of resolution without producing a verdict.
struct Inconclusive : Error {
  using Error::Error;
};

// Configuration text is not syntactically valid; message carries line/column.
struct ParseError : Error {
  using Error::Error;
};

// Configuration parsed but a field is missing, unknown, or out of range.
struct ValidationError : Error {
  using Error::Error;
};

}  // namespace sislab
