#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fisheyex {

enum class ErrorCode {
  invalid_argument,
  file_not_found,
  unsupported_format,
  bad_magic,
  truncated,
  dimension_overflow,
  shape_mismatch,
  invalid_profile,
  sampling_failed,
  non_finite,
  config_mismatch,
  detection_failed,
  full_frame,
  missing_data,
  partial_output,
  io_failure,
};

/// Coarse classification used by the CLI to pick an exit status.
enum class ErrorKind { usage, data, numeric };

std::string_view to_string(ErrorCode code);
ErrorKind kind_of(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorKind kind() const noexcept { return kind_of(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace fisheyex
