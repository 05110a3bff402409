#include "core/error.hpp"

namespace ginet {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::InvalidGeometry: return "invalid-geometry";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Io: return "io";
    case ErrorCode::Shape: return "shape";
    case ErrorCode::Config: return "config";
    case ErrorCode::Version: return "version";
    case ErrorCode::NoDepth: return "no-depth";
    case ErrorCode::Numeric: return "numeric";
    case ErrorCode::InvalidScene: return "invalid-scene";
    case ErrorCode::Decode: return "decode";
    case ErrorCode::Internal: return "internal";
  }
  return "internal";
}

}  // namespace ginet
