#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sono/agent.hpp"
#include "sono/avatar_ik.hpp"
#include "sono/impedance.hpp"
#include "sono/phase.hpp"
#include "sono/simulation.hpp"

namespace sono {

struct SessionConfig {
  ScanPath scan_path;
  Pose home_pose;                 // where the robot waits, lifted away from the arm
  double approach_speed = 0.05;   // m/s, home -> scan start
  double retract_speed = 0.05;    // m/s, back to home
  ImpedanceGains gains = ImpedanceGains::probe_defaults();
  TissueModel tissue;
  SimConfig sim;
  AgentConfig agent;
  ScriptTable script = ScriptTable::defaults();
  AvatarRig avatar;
  Vec3 patient_head{0.0, -0.30, 0.60};
  std::uint64_t seed = 0;
  int tick_rate = 1000;           // Hz, in [100, 1000]
  double greeting_s = 4.0;        // greeting lasts this long before Resting
  double resting_timeout_s = 300.0;
  double max_session_s = 3600.0;

  static SessionConfig defaults();
  // Throws InvalidConfig naming the offending field.
  void validate() const;
};

// --- Inputs accepted by the event loop -------------------------------------

struct SetScanPath { ScanPath path; };          // operator-recorded start/end poses
struct BeginSession {};                          // recording and visualization on
struct PatientSpeech { std::string text; };      // transcribed patient speech
struct OperatorCommand { AgentCommand command = AgentCommand::None; };
struct AdvanceTo { double time = 0.0; };         // run ticks up to this session time

using SessionInput = std::variant<SetScanPath, BeginSession, PatientSpeech, OperatorCommand, AdvanceTo>;

// --- Events recorded in the session log ------------------------------------

enum class EventKind { PhaseChange, Utterance, RobotState, SafetyAbort, Command };

std::string_view to_string(EventKind k);

struct PhaseChangeEvent {
  ProcedurePhase from = ProcedurePhase::Setup;
  ProcedurePhase to = ProcedurePhase::Setup;
  std::string cause;
};

struct UtteranceEvent {
  Utterance utterance;
  std::optional<StageLatency> latency;  // agent replies only
  bool announcement = false;
  std::optional<Rotation> head_rotation;  // avatar gaze toward the speaker
};

struct RobotStateEvent {
  ProcedurePhase phase = ProcedurePhase::Setup;
  Pose probe_pose;
  double contact_force = 0.0;
  double penetration = 0.0;
  bool reach_engaged = false;
  std::optional<Vec3> wrist_position;
};

struct SafetyAbortEvent {
  double contact_force = 0.0;
  double cap = 0.0;
};

struct CommandEvent {
  std::string command;  // "start_scan" | "stop_scan" | "set_path"
  std::string source;   // "agent" | "operator"
  bool accepted = true;
  std::string reason;
};

using EventPayload =
    std::variant<PhaseChangeEvent, UtteranceEvent, RobotStateEvent, SafetyAbortEvent, CommandEvent>;

struct SessionEvent {
  double timestamp = 0.0;
  EventPayload payload;

  EventKind kind() const { return static_cast<EventKind>(payload.index()); }
};

nlohmann::json event_to_json(const SessionEvent& e);
SessionEvent event_from_json(const nlohmann::json& j);

// --- State -----------------------------------------------------------------

enum class MotionSegment { Idle, Approach, Scan, Retract };

struct SessionState {
  ProcedurePhase phase = ProcedurePhase::Setup;
  std::int64_t tick = 0;
  double time = 0.0;
  double phase_entered_at = 0.0;
  ScanPath scan_path;
  MotionSegment segment = MotionSegment::Idle;
  ScanPath segment_path;
  double segment_started_at = 0.0;
  SimState sim;
  bool reach_engaged = false;
  std::optional<Vec3> wrist_position;
  int start_commands_taken = 0;
  std::uint64_t utterance_count = 0;
  std::deque<Utterance> transcript;  // recent window for the generator
  std::int64_t last_logged_bucket = -1;
  std::string end_cause;
  bool finished = false;
};

// Exact snapshot of every state field; two states are identical iff their
// snapshots compare equal.
nlohmann::json snapshot(const SessionState& s);

struct Transition {
  SessionState state;
  std::vector<SessionEvent> events;
  bool rejected = false;  // input was invalid for the phase; state unchanged
};

// Pure decision function over an immutable configuration. All mutable
// session state lives in SessionState; the same inputs replayed over the
// same initial state reproduce the same states and events.
class Orchestrator {
 public:
  explicit Orchestrator(SessionConfig config,
                        std::shared_ptr<const ResponseGenerator> generator = {});

  const SessionConfig& config() const { return config_; }
  SessionState initial_state() const;
  Transition handle_event(const SessionState& state, const SessionInput& input) const;

 private:
  void tick(SessionState& s, std::vector<SessionEvent>& out) const;
  void change_phase(SessionState& s, ProcedurePhase to, const std::string& cause,
                    std::vector<SessionEvent>& out) const;
  void start_segment(SessionState& s, MotionSegment segment, const ScanPath& path) const;
  void begin_retract(SessionState& s) const;
  void apply_command(SessionState& s, AgentCommand command, const std::string& source,
                     std::vector<SessionEvent>& out, bool& rejected) const;
  void log_robot_state(const SessionState& s, std::vector<SessionEvent>& out) const;

  SessionConfig config_;
  Agent agent_;
  ImpedanceGains passive_gains_;
};

struct ScheduledUtterance {
  double t_s = 0.0;
  std::string text;
};

struct SessionLog {
  std::vector<SessionInput> inputs;  // the exact stream fed to handle_event
  std::vector<SessionEvent> events;
  SessionState final_state;
};

struct RunOptions {
  double setup_s = 2.0;  // BeginSession is issued at this time
};

// Drives a full session from a scripted utterance schedule; deterministic in
// (config, schedule).
SessionLog run_session(const SessionConfig& config, const std::vector<ScheduledUtterance>& schedule,
                       const RunOptions& options = {});

// Re-runs handle_event over a recorded input stream.
SessionState replay(const Orchestrator& orchestrator, const std::vector<SessionInput>& inputs);

struct PhaseInterval {
  ProcedurePhase phase = ProcedurePhase::Setup;
  double t_start = 0.0;
  double t_end = 0.0;
};

// Contiguous partition of [first event, last event] by phase. Throws
// MalformedLog on an empty log, decreasing timestamps or inconsistent
// phase changes.
std::vector<PhaseInterval> phase_intervals(const std::vector<SessionEvent>& log);

std::string phase_intervals_csv(const std::vector<PhaseInterval>& intervals);
std::vector<PhaseInterval> parse_phase_intervals_csv(std::string_view text);

std::string session_log_jsonl(const std::vector<SessionEvent>& log);
std::vector<SessionEvent> parse_session_log_jsonl(std::string_view text);

// `t_s,px,py,pz,delta_m,force_n,phase` from the RobotState events.
std::string simulation_csv(const std::vector<SessionEvent>& log);

}  // namespace sono
