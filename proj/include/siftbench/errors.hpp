#pragma once

#include <stdexcept>
#include <string>

namespace siftbench {

// Root of every error thrown by the library. Callers that only need to
// distinguish "expected failure" from bugs can catch this type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be opened, read, or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// File was readable but its content is malformed or uses an unsupported
// feature (bit depth, color type, header token...).
class FormatError : public Error {
 public:
  using Error::Error;
};

// A function argument violated its precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// An image is too small for the requested operation.
class SizeError : public Error {
 public:
  using Error::Error;
};

// Invalid run configuration (missing corpus, empty directory...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace siftbench
