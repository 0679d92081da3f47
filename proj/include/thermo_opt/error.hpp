#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace thermo_opt {

enum class ErrorCode {
  MalformedFile,
  UnsupportedVersion,
  EmptyVolume,
  UntaggedBoundary,
  InvalidDimension,
  DegenerateSector,
  AlreadyP2,
  NotP2,
  InvalidPoint,
  NonpositiveDt,
  MissingTemperatureField,
  NotConverged,
  SingularMatrix,
  RigidBodyMode,
  InvalidSchedule,
  InfeasibleRateLimit,
  ForwardModelFailure,
  QpInfeasible,
  CallbackFailure,
  InvalidConfig,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::EmptyVolume: return "EmptyVolume";
    case ErrorCode::UntaggedBoundary: return "UntaggedBoundary";
    case ErrorCode::InvalidDimension: return "InvalidDimension";
    case ErrorCode::DegenerateSector: return "DegenerateSector";
    case ErrorCode::AlreadyP2: return "AlreadyP2";
    case ErrorCode::NotP2: return "NotP2";
    case ErrorCode::InvalidPoint: return "InvalidPoint";
    case ErrorCode::NonpositiveDt: return "NonpositiveDt";
    case ErrorCode::MissingTemperatureField: return "MissingTemperatureField";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::RigidBodyMode: return "RigidBodyMode";
    case ErrorCode::InvalidSchedule: return "InvalidSchedule";
    case ErrorCode::InfeasibleRateLimit: return "InfeasibleRateLimit";
    case ErrorCode::ForwardModelFailure: return "ForwardModelFailure";
    case ErrorCode::QpInfeasible: return "QpInfeasible";
    case ErrorCode::CallbackFailure: return "CallbackFailure";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace thermo_opt
