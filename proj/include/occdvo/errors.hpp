#pragma once

#include <stdexcept>
#include <string>

namespace occdvo {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters, mismatched dimensions, unusable run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A file was readable but its content does not have the expected format.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Input geometry outside an operation's domain (behind camera, invalid
/// depth, near-singular logarithm, degenerate viewpoint).
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// The residual system has too few contributing pixels to constrain a pose.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// A cost or update became non-finite.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Sequence or trajectory without enough samples for the requested operation.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace occdvo
