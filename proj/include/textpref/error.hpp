#pragma once

#include <stdexcept>
#include <string>

namespace textpref {

/// Base error for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad input data or configuration: malformed rows, broken invariants,
/// missing files. The CLI maps these to exit code 1.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(what) {}
};

/// Raised when a passage cannot be degraded (too few tokens, or token
/// repetition makes the requested displacement impossible). Callers decide
/// whether this skips the passage or aborts the run.
class NotDegradable : public Error {
 public:
  explicit NotDegradable(const std::string& what) : Error(what) {}
};

}  // namespace textpref
