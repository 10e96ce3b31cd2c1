#pragma once

#include <stdexcept>
#include <string>

namespace evcs {

// Failure categories. Each maps to a stable CLI exit code.
enum class ErrorKind {
  Parse,             // malformed input file or argument
  Validation,        // physically invalid parameters, unsolvable condition
  Degenerate,        // heralding probability ~0, division by zero in a metric
  Truncation,        // photon-number cap loses too much probability
  OracleUnreliable,  // oracle leakage or oracle/engine disagreement
  EmptyResult,       // search produced no admissible row
  Config,            // request outside supported bounds
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Truncation: return "truncation";
    case ErrorKind::OracleUnreliable: return "oracle";
    case ErrorKind::EmptyResult: return "empty-result";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

}  // namespace evcs
