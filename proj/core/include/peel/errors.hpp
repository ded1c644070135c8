#pragma once

#include <stdexcept>
#include <string>

namespace peel {

// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Root finding / fixed point did not converge; carries residual info in the message.
struct SolverFailure : Error {
  using Error::Error;
};

// Weight sequence is not admissible (disk weights diverge) or malformed.
struct InadmissibleError : Error {
  using Error::Error;
};

// A table or series was truncated too aggressively for the requested operation.
struct TruncationError : Error {
  using Error::Error;
};

// Two routes to the same quantity disagree beyond tolerance.
struct ConsistencyError : Error {
  using Error::Error;
};

// An exploration exceeded its step budget.
struct BudgetError : Error {
  using Error::Error;
};

// A measurement needs a larger ball radius to be determined.
struct IndeterminateError : Error {
  using Error::Error;
};

// Bad CLI/config input.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace peel
