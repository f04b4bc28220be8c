#pragma once

#include <stdexcept>
#include <string>

namespace rimamba {

/// Base for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument or violated precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Not enough points/patches/neighbors for the requested operation.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. The message names a line number or byte offset.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Input geometry whose reference frame is not uniquely defined.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Re-throws `e` as the same error type with `context: ` prepended.
[[noreturn]] void rethrow_with_context(const Error& e, const std::string& context);

}  // namespace rimamba
