#pragma once

#include <stdexcept>
#include <string>

namespace nodal {

enum class ErrorCode {
  MalformedPartition,
  GenericityViolation,
  NotCritical,
  IncompatibleData,
  Resonance,
  WrongEntryPoint,
  InsufficientCutoff,
  UnsupportedGeometry,
  AssemblyInconsistency,
  NonConvergence,
  StepSize,
  OrderingViolation,
  Ambiguity,
  InvalidArgument,
  InvalidConfig,
  Io,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedPartition: return "malformed-partition";
    case ErrorCode::GenericityViolation: return "genericity-violation";
    case ErrorCode::NotCritical: return "not-critical";
    case ErrorCode::IncompatibleData: return "incompatible-data";
    case ErrorCode::Resonance: return "resonance";
    case ErrorCode::WrongEntryPoint: return "wrong-entry-point";
    case ErrorCode::InsufficientCutoff: return "insufficient-cutoff";
    case ErrorCode::UnsupportedGeometry: return "unsupported-geometry";
    case ErrorCode::AssemblyInconsistency: return "assembly-inconsistency";
    case ErrorCode::NonConvergence: return "non-convergence";
    case ErrorCode::StepSize: return "step-size";
    case ErrorCode::OrderingViolation: return "ordering-violation";
    case ErrorCode::Ambiguity: return "ambiguity";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::InvalidConfig: return "invalid-config";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace nodal
