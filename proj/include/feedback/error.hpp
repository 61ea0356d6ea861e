#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace feedback {

enum class ErrorKind {
  InvalidArgument,
  EmptyUrn,
  DecayModeMismatch,
  DegenerateMatrix,
  NoValidRoot,
  DegenerateRates,
  NegativeRadicand,
  DivisionByZero,
  FutureEvent,
  EmptyWindow,
  NonFinite,
  Config,
  SchemaMismatch,
  Io,
  Internal,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every library failure surfaces as this exception; callers switch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace feedback
