#pragma once

#include <stdexcept>

namespace mbt {

// Invalid distribution or experiment parameters; raised at construction time.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// API misuse: arity mismatch, off-grid argument, out-of-range threshold.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A model-level constraint is violated, e.g. an allocation leaving [0,1].
struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mbt
