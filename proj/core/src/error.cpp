#include "fisheyex/error.hpp"

namespace fisheyex {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::file_not_found: return "file not found";
    case ErrorCode::unsupported_format: return "unsupported format";
    case ErrorCode::bad_magic: return "bad magic";
    case ErrorCode::truncated: return "truncated payload";
    case ErrorCode::dimension_overflow: return "dimension overflow";
    case ErrorCode::shape_mismatch: return "shape mismatch";
    case ErrorCode::invalid_profile: return "invalid profile";
    case ErrorCode::sampling_failed: return "sampling failed";
    case ErrorCode::non_finite: return "non-finite value";
    case ErrorCode::config_mismatch: return "config mismatch";
    case ErrorCode::detection_failed: return "detection failed";
    case ErrorCode::full_frame: return "full-frame image";
    case ErrorCode::missing_data: return "missing data";
    case ErrorCode::partial_output: return "partial output";
    case ErrorCode::io_failure: return "i/o failure";
  }
  return "unknown";
}

ErrorKind kind_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument:
      return ErrorKind::usage;
    case ErrorCode::non_finite:
      return ErrorKind::numeric;
    default:
      return ErrorKind::data;
  }
}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace fisheyex
