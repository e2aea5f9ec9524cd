#pragma once

#include <stdexcept>
#include <string>

namespace percoflow {

enum class ErrorKind {
  EmptyBox,
  NoSourceOrSink,
  InvalidDomain,
  NonpositiveHeight,
  EmptyDiscretization,
  OverlappingTerminals,
  EmptyTerminal,
  CapacityOverflow,
  EmptyInstance,
  DegenerateTriangle,
  MissingDirection,
  InvalidArgument,
  ParseError,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyBox: return "EmptyBox";
    case ErrorKind::NoSourceOrSink: return "NoSourceOrSink";
    case ErrorKind::InvalidDomain: return "InvalidDomain";
    case ErrorKind::NonpositiveHeight: return "NonpositiveHeight";
    case ErrorKind::EmptyDiscretization: return "EmptyDiscretization";
    case ErrorKind::OverlappingTerminals: return "OverlappingTerminals";
    case ErrorKind::EmptyTerminal: return "EmptyTerminal";
    case ErrorKind::CapacityOverflow: return "CapacityOverflow";
    case ErrorKind::EmptyInstance: return "EmptyInstance";
    case ErrorKind::DegenerateTriangle: return "DegenerateTriangle";
    case ErrorKind::MissingDirection: return "MissingDirection";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

// All recoverable failures of the library surface as Error; the kind is
// what callers (and tests) dispatch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace percoflow
