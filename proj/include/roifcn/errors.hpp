#pragma once

#include <stdexcept>

namespace roifcn {

// Raised when a computation produces numerically unacceptable results
// (non-finite losses or gradients, oracle disagreement). The CLI maps this
// to exit code 2, everything else recoverable to exit code 1.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace roifcn
