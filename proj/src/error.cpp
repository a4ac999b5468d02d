#include "sono/error.hpp"

namespace sono {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::InvalidTimestep: return "InvalidTimestep";
    case ErrorCode::NonpositiveStiffness: return "NonpositiveStiffness";
    case ErrorCode::InvalidChain: return "InvalidChain";
    case ErrorCode::DegenerateTarget: return "DegenerateTarget";
    case ErrorCode::DegeneratePole: return "DegeneratePole";
    case ErrorCode::InvalidTransition: return "InvalidTransition";
    case ErrorCode::GeneratorUnavailable: return "GeneratorUnavailable";
    case ErrorCode::MalformedLog: return "MalformedLog";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::OversizePayload: return "OversizePayload";
    case ErrorCode::UnknownType: return "UnknownType";
    case ErrorCode::CorruptLength: return "CorruptLength";
    case ErrorCode::MalformedPayload: return "MalformedPayload";
    case ErrorCode::BindError: return "BindError";
    case ErrorCode::SignalTooShort: return "SignalTooShort";
    case ErrorCode::FlatSignal: return "FlatSignal";
    case ErrorCode::TooFewBeats: return "TooFewBeats";
    case ErrorCode::TooFewIntervals: return "TooFewIntervals";
    case ErrorCode::AllZeroDifferences: return "AllZeroDifferences";
    case ErrorCode::DegenerateGroups: return "DegenerateGroups";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::NOutOfRange: return "NOutOfRange";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::ItemOutOfRange: return "ItemOutOfRange";
    case ErrorCode::WrongItemCount: return "WrongItemCount";
  }
  return "Unknown";
}

}  // namespace sono
