#include "feedback/error.hpp"

namespace feedback {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::EmptyUrn: return "EmptyUrn";
    case ErrorKind::DecayModeMismatch: return "DecayModeMismatch";
    case ErrorKind::DegenerateMatrix: return "DegenerateMatrix";
    case ErrorKind::NoValidRoot: return "NoValidRoot";
    case ErrorKind::DegenerateRates: return "DegenerateRates";
    case ErrorKind::NegativeRadicand: return "NegativeRadicand";
    case ErrorKind::DivisionByZero: return "DivisionByZero";
    case ErrorKind::FutureEvent: return "FutureEvent";
    case ErrorKind::EmptyWindow: return "EmptyWindow";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::Config: return "Config";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace feedback
