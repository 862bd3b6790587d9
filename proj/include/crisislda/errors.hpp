#pragma once

#include <stdexcept>
#include <string>

namespace clda {

// Exit-code mapping used by the CLI: 2 argument, 3 I/O, 4 empty result,
// 5 numerical.
struct ArgumentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyResultError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when sampler count aggregates go inconsistent (a bug, not input).
struct StateCorruptionError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace clda
