#pragma once

#include <stdexcept>
#include <string>

namespace diact {

// Malformed input files, invalid configurations and corpus invariant
// violations. The CLI maps these to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failures during training or evaluation. The CLI maps these to exit code 3.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A NaN or infinity surfaced inside a layer, loss or optimizer step.
class NumericError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

}  // namespace diact
