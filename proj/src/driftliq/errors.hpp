#ifndef DRIFTLIQ_ERRORS_HPP
#define DRIFTLIQ_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace driftliq {

enum class ErrorCode {
  DegenerateParameter,
  SignMassViolation,
  ShiftBreaksSignMass,
  UnsupportedKind,
  NumericalUnderflow,
  OutOfSupport,
  BracketFailure,
  GridTooCoarse,
  DomainTooNarrow,
  OutOfGrid,
  StabilityViolation,
  WrongPriorKind,
  EngineUnavailable,
  NoRootInBracket,
  ConfigError,
  InvalidArgument,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::DegenerateParameter: return "DegenerateParameter";
    case ErrorCode::SignMassViolation: return "SignMassViolation";
    case ErrorCode::ShiftBreaksSignMass: return "ShiftBreaksSignMass";
    case ErrorCode::UnsupportedKind: return "UnsupportedKind";
    case ErrorCode::NumericalUnderflow: return "NumericalUnderflow";
    case ErrorCode::OutOfSupport: return "OutOfSupport";
    case ErrorCode::BracketFailure: return "BracketFailure";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::DomainTooNarrow: return "DomainTooNarrow";
    case ErrorCode::OutOfGrid: return "OutOfGrid";
    case ErrorCode::StabilityViolation: return "StabilityViolation";
    case ErrorCode::WrongPriorKind: return "WrongPriorKind";
    case ErrorCode::EngineUnavailable: return "EngineUnavailable";
    case ErrorCode::NoRootInBracket: return "NoRootInBracket";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + msg), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

}  // namespace driftliq

#endif
