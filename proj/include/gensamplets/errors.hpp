#pragma once

#include <stdexcept>
#include <string>

namespace gensamplets {

/// Raised for precondition violations on user-supplied data
/// (malformed files, dimension mismatches, invalid parameters).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical kernel cannot deliver a trustworthy result
/// (eigen-solver non-convergence, Gram matrix above the condition cap).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gensamplets
