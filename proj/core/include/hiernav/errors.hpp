#pragma once

#include <stdexcept>
#include <string>

namespace hiernav {

enum class ErrorKind {
  Parse,
  Validation,
  InvalidArgument,
  NotFound,
  Unreachable,
  LocalBlocked,
  Protocol,
  Io,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` distinguishes failure classes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace hiernav
