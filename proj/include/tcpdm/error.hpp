#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tcpdm {

enum class ErrorCode {
  InvalidSchedule,
  ShapeMismatch,
  StepOutOfRange,
  EmptyBatch,
  InvalidConfig,
  OddDimension,
  NonFiniteLoss,
  PatchTooLarge,
  OutOfBounds,
  CoverageHole,
  ImageTooSmall,
  DegenerateConfiguration,
  LengthMismatch,
  BadMagic,
  TruncatedPayload,
  UnsupportedDtype,
  ShapeOutOfFrame,
  ChannelMismatch,
  IoError,
  ConfigMismatch,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure surfaced by the library carries one of the codes above so
// callers (and the CLI exit-code mapping) can branch on the kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidSchedule: return "InvalidSchedule";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::StepOutOfRange: return "StepOutOfRange";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::OddDimension: return "OddDimension";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::PatchTooLarge: return "PatchTooLarge";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::CoverageHole: return "CoverageHole";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::ShapeOutOfFrame: return "ShapeOutOfFrame";
    case ErrorCode::ChannelMismatch: return "ChannelMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
  }
  return "Unknown";
}

}  // namespace tcpdm
