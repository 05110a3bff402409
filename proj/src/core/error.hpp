#pragma once

#include <stdexcept>
#include <string>

namespace ginet {

// Categories are stable: they are surfaced verbatim through the C API and the
// CLI's machine-readable error lines.
enum class ErrorCode {
  InvalidArgument = 1,
  InvalidGeometry,
  Parse,
  Io,
  Shape,
  Config,
  Version,
  NoDepth,
  Numeric,
  InvalidScene,
  Decode,
  Internal,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace ginet
