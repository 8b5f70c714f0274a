#pragma once

#include <stdexcept>
#include <string>

namespace polyinit {

// Bad input: malformed intervals, dimension mismatches, unparsable files,
// configuration violations. The CLI maps this to exit code 2.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical failure: solver non-convergence, rank deficiency, non-finite
// values. The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace polyinit
