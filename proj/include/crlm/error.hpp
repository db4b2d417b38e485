#pragma once

#include <stdexcept>
#include <string>

namespace crlm {

// Base class for every error raised by the toolkit. Callers that only care
// about "something failed" catch this; the subclasses carry a kind tag.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

enum class IoErrorKind {
  not_found,
  bad_magic,
  nonpositive_dims,
  truncated_payload,
  unsupported_datatype,
  bad_header,
  write_failed,
};

inline const char* to_string(IoErrorKind k) {
  switch (k) {
    case IoErrorKind::not_found: return "file not found";
    case IoErrorKind::bad_magic: return "bad magic";
    case IoErrorKind::nonpositive_dims: return "nonpositive dims";
    case IoErrorKind::truncated_payload: return "truncated payload";
    case IoErrorKind::unsupported_datatype: return "unsupported datatype";
    case IoErrorKind::bad_header: return "bad header";
    case IoErrorKind::write_failed: return "write failed";
  }
  return "io error";
}

class IoError : public Error {
 public:
  IoError(IoErrorKind kind, const std::string& detail)
      : Error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}
  IoErrorKind kind() const noexcept { return kind_; }

 private:
  IoErrorKind kind_;
};

// SAMONAI could not find any foreground on the initial slice.
class NoObjectFound : public Error {
 public:
  using Error::Error;
};

// Raised when a cooperative cancellation request is observed mid-run.
class Canceled : public Error {
 public:
  Canceled() : Error("canceled") {}
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

}  // namespace crlm
