#pragma once

#include <array>
#include <string_view>

namespace sono {

enum class ProcedurePhase { Setup, Greeting, Resting, Execution, Complete, Aborted };

inline constexpr std::array<ProcedurePhase, 6> kAllPhases = {
    ProcedurePhase::Setup,     ProcedurePhase::Greeting, ProcedurePhase::Resting,
    ProcedurePhase::Execution, ProcedurePhase::Complete, ProcedurePhase::Aborted};

// Wire/file names: "setup", "greeting", "resting", "execution", "complete", "aborted".
std::string_view to_string(ProcedurePhase phase);
// Throws ParseError for an unknown name.
ProcedurePhase phase_from_string(std::string_view name);

// Setup->Greeting->Resting->Execution->Complete, plus Resting/Execution->Aborted.
constexpr bool is_valid_transition(ProcedurePhase from, ProcedurePhase to) {
  using P = ProcedurePhase;
  switch (from) {
    case P::Setup: return to == P::Greeting;
    case P::Greeting: return to == P::Resting;
    case P::Resting: return to == P::Execution || to == P::Aborted;
    case P::Execution: return to == P::Complete || to == P::Aborted;
    case P::Complete:
    case P::Aborted: return false;
  }
  return false;
}

constexpr bool is_terminal(ProcedurePhase p) {
  return p == ProcedurePhase::Complete || p == ProcedurePhase::Aborted;
}

}  // namespace sono
