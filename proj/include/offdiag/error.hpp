#pragma once

#include <stdexcept>
#include <string>

namespace offdiag {

enum class ErrorKind {
  InvalidInput,
  ShapeError,
  NotHermitian,
  NotPositiveDefinite,
  InvalidRank,
  NotAProjection,
  AmbiguousRank,
  NotNormal,
  InvalidComparator,
  HypothesesNotMet,
  SearchExhausted,
  InvalidTarget,
  PerturbationTooLarge,
  OutOfScope,
  AmbiguousChain,
  NotCyclicWitness,
  NumericalFailure,
  FormatError,
};

const char* to_string(ErrorKind kind);

/// All library failures are thrown as Error; kind() carries the contract
/// violation so callers (and the CLI exit-code mapping) can dispatch on it.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

} // namespace offdiag
