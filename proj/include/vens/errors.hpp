#pragma once

#include <stdexcept>
#include <string>

namespace vens {

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Tensor shape or dimension mismatch.
struct ShapeError : Error {
  using Error::Error;
};

/// Non-finite or otherwise out-of-domain numeric input.
struct NumericError : Error {
  using Error::Error;
};

/// Index (class id, token id, position) out of range.
struct IndexError : Error {
  using Error::Error;
};

/// Token id outside the vocabulary.
struct VocabularyError : Error {
  using Error::Error;
};

/// Malformed input file; message carries the line number.
struct ParseError : Error {
  using Error::Error;
};

/// Unknown label encountered at evaluation time.
struct LabelError : Error {
  using Error::Error;
};

/// Invalid or inconsistent experiment configuration.
struct ConfigError : Error {
  using Error::Error;
};

/// Optimizer state no longer matches the registered parameters.
struct StateError : Error {
  using Error::Error;
};

/// Aggregation over an empty or misaligned prediction set.
struct AggregationError : Error {
  using Error::Error;
};

/// Metric requested over empty inputs.
struct MetricError : Error {
  using Error::Error;
};

}  // namespace vens
