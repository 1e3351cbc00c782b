#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fadslam {

enum class Errc {
  NonPositiveDepth,
  InvalidDepth,
  DegenerateBaseline,
  NullLine,
  EmptyImage,
  EmptyCalibrationSet,
  DegenerateSegment,
  PartiallyBehindCamera,
  InsufficientObservations,
  InvalidConfig,
  NoAssociations,
  DegenerateConfiguration,
  InsufficientPoses,
  ParseError,
  IoError,
  TrackingLost,
};

inline std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::NonPositiveDepth: return "NonPositiveDepth";
    case Errc::InvalidDepth: return "InvalidDepth";
    case Errc::DegenerateBaseline: return "DegenerateBaseline";
    case Errc::NullLine: return "NullLine";
    case Errc::EmptyImage: return "EmptyImage";
    case Errc::EmptyCalibrationSet: return "EmptyCalibrationSet";
    case Errc::DegenerateSegment: return "DegenerateSegment";
    case Errc::PartiallyBehindCamera: return "PartiallyBehindCamera";
    case Errc::InsufficientObservations: return "InsufficientObservations";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::NoAssociations: return "NoAssociations";
    case Errc::DegenerateConfiguration: return "DegenerateConfiguration";
    case Errc::InsufficientPoses: return "InsufficientPoses";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
    case Errc::TrackingLost: return "TrackingLost";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable error code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace fadslam
