#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace reentry {

enum class ErrorKind {
  io,
  parse,
  config,
  missing_input,
  invalid_argument,
  inconsistency,
  protocol,
  transport,
  internal,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the core carries a kind so the C boundary can map
// it onto a status code without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace reentry
