#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sono {

enum class ErrorCode {
  InvalidArgument,
  LengthMismatch,
  DimensionMismatch,
  // registration
  TooFewPoints,
  DegenerateConfiguration,
  IoError,
  ParseError,
  VersionMismatch,
  // robot-sim
  InvalidTimestep,
  NonpositiveStiffness,
  InvalidChain,
  // avatar
  DegenerateTarget,
  DegeneratePole,
  // agent / orchestrator
  InvalidTransition,
  GeneratorUnavailable,
  MalformedLog,
  InvalidConfig,
  // protocol
  OversizePayload,
  UnknownType,
  CorruptLength,
  MalformedPayload,
  BindError,
  // biosignal
  SignalTooShort,
  FlatSignal,
  TooFewBeats,
  TooFewIntervals,
  // stats
  AllZeroDifferences,
  DegenerateGroups,
  TooFewRows,
  NOutOfRange,
  ZeroVariance,
  ItemOutOfRange,
  WrongItemCount,
};

std::string_view to_string(ErrorCode code);

// Single exception type for every domain failure; the code says which.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace sono
