#pragma once

#include <stdexcept>
#include <string>

namespace hma {

/// Shapes do not satisfy an operation's contract.
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An index or length falls outside its valid range.
struct RangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A non-shape API precondition was violated.
struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input file (corpus, vectors, config, checkpoint).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace hma
