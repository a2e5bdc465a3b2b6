#pragma once

#include <stdexcept>
#include <string>

namespace uulab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Index outside the valid range of a table dimension.
struct IndexError : Error {
  using Error::Error;
};

/// A caller broke an operation's precondition.
struct ContractError : Error {
  using Error::Error;
};

/// Generator parameters admit no valid environment.
struct InfeasibleError : Error {
  using Error::Error;
};

/// Malformed input file.
struct ParseError : Error {
  using Error::Error;
};

/// Well-formed input that violates a model invariant.
struct ValidationError : Error {
  using Error::Error;
};

/// An internal consistency check failed; indicates a bug, not bad input.
struct InternalError : Error {
  using Error::Error;
};

/// Requested data was not recorded (e.g. visit log disabled).
struct UnavailableError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace uulab
