#pragma once

#include <stdexcept>
#include <string>

namespace vq2d {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value violates a documented precondition or type invariant.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A file could not be read, written or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

// A file uses a schema_version this build does not understand.
class UnsupportedSchema : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace vq2d
