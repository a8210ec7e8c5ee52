#pragma once

#include <stdexcept>
#include <string>

namespace cvar {

// Shape disagreement between tensors or model widths.
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Math outside the defined domain (log/sqrt of negatives, ...).
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad call arguments (empty lists, out-of-range settings, unknown names).
struct ArgumentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operation attempted on an object in the wrong state.
struct StateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dataset file problems; message carries file name and line when known.
struct IngestionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dataset split violated a protocol requirement (e.g. empty test set).
struct SplitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Generic file read/write failure.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cvar
