#include "sono/phase.hpp"

#include <string>

#include "sono/error.hpp"

namespace sono {

std::string_view to_string(ProcedurePhase phase) {
  switch (phase) {
    case ProcedurePhase::Setup: return "setup";
    case ProcedurePhase::Greeting: return "greeting";
    case ProcedurePhase::Resting: return "resting";
    case ProcedurePhase::Execution: return "execution";
    case ProcedurePhase::Complete: return "complete";
    case ProcedurePhase::Aborted: return "aborted";
  }
  return "setup";
}

ProcedurePhase phase_from_string(std::string_view name) {
  for (const auto p : kAllPhases) {
    if (to_string(p) == name) return p;
  }
  fail(ErrorCode::ParseError, "unknown phase '" + std::string(name) + "'");
}

}  // namespace sono
