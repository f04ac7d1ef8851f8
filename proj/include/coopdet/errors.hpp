#pragma once

#include <stdexcept>
#include <string>

namespace coopdet {

// Error families map to CLI exit codes: usage=2, data=3, numeric=4.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BadMagicError : DataError {
  using DataError::DataError;
};

struct UnsupportedVersionError : DataError {
  using DataError::DataError;
};

struct TruncatedError : DataError {
  using DataError::DataError;
};

struct LengthMismatchError : DataError {
  using DataError::DataError;
};

struct MissingFileError : DataError {
  using DataError::DataError;
};

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when even the smallest bank member exceeds the byte budget.
struct NoFittingEncoderError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace coopdet
