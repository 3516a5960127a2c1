#include "reentry/error.hpp"

namespace reentry {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::parse: return "parse";
    case ErrorKind::config: return "config";
    case ErrorKind::missing_input: return "missing_input";
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::inconsistency: return "inconsistency";
    case ErrorKind::protocol: return "protocol";
    case ErrorKind::transport: return "transport";
    case ErrorKind::internal: return "internal";
  }
  return "internal";
}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace reentry
