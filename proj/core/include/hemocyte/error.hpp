#pragma once

#include <stdexcept>
#include <string>

namespace hemocyte {

enum class ErrorCode {
  InvalidInput,
  ConversionUnsupported,
  InvalidSpec,
  NoForeground,
  InvalidParams,
  InsufficientData,
  InvalidData,
  DegenerateData,
  InsufficientClassData,
  DimensionMismatch,
  LayoutError,
  EmptyClass,
  IoError,
  ConfigError,
};

/// Library-wide exception carrying a machine-readable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "invalid-input";
    case ErrorCode::ConversionUnsupported: return "conversion-unsupported";
    case ErrorCode::InvalidSpec: return "invalid-spec";
    case ErrorCode::NoForeground: return "no-foreground";
    case ErrorCode::InvalidParams: return "invalid-params";
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::InvalidData: return "invalid-data";
    case ErrorCode::DegenerateData: return "degenerate-data";
    case ErrorCode::InsufficientClassData: return "insufficient-class-data";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::LayoutError: return "layout-error";
    case ErrorCode::EmptyClass: return "empty-class";
    case ErrorCode::IoError: return "io-error";
    case ErrorCode::ConfigError: return "config-error";
  }
  return "unknown";
}

}  // namespace hemocyte
