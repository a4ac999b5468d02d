#include "sono/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sono/csv.hpp"
#include "sono/error.hpp"
#include "sono/json_io.hpp"

namespace sono {

namespace {

constexpr std::size_t kTranscriptWindow = 8;
constexpr int kLogRateHz = 100;
// Retraction counts as done once the axial spring has relaxed this far.
constexpr double kMaxPhysicsStep = 1e-3;  // s
constexpr double kRestOffset = 1e-6;
constexpr double kRestVelocity = 1e-5;
constexpr double kRetractGrace = 10.0;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::uint64_t utterance_seed(std::uint64_t session_seed, std::uint64_t index) {
  return session_seed * 0x100000001b3ULL + index + 1;
}

Pose current_waypoint(const SessionState& s) {
  return scan_waypoint(s.segment_path, std::max(0.0, s.time - s.segment_started_at));
}

void remember(SessionState& s, Utterance u) {
  s.transcript.push_back(std::move(u));
  while (s.transcript.size() > kTranscriptWindow) s.transcript.pop_front();
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  auto j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

}  // namespace

// --- config ------------------------------------------------------------------

SessionConfig SessionConfig::defaults() {
  SessionConfig c;
  const Rotation probe_down = Rotation::from_axis_angle(Vec3::unit_x(), std::numbers::pi);
  c.scan_path.start_pose = {{0.50, -0.05, 0.0}, probe_down};
  c.scan_path.end_pose = {{0.50, 0.05, 0.0}, probe_down};
  c.scan_path.speed = 0.01;
  c.home_pose = {{0.50, -0.30, 0.20}, probe_down};
  return c;
}

void SessionConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::InvalidConfig, what); };
  if (tick_rate < 100 || tick_rate > 1000) bad("tick_rate must lie in [100, 1000] Hz");
  if (!(scan_path.speed > 0.0)) bad("scan_path.speed must be positive");
  if (!(approach_speed > 0.0)) bad("approach_speed must be positive");
  if (!(retract_speed > 0.0)) bad("retract_speed must be positive");
  if (!(greeting_s >= 0.0)) bad("greeting_s must be >= 0");
  if (!(resting_timeout_s > 0.0)) bad("resting_timeout_s must be positive");
  if (!(max_session_s > 0.0)) bad("max_session_s must be positive");
  if (!(sim.virtual_mass > 0.0)) bad("virtual_mass must be positive");
  if (!(sim.force_cap > 0.0)) bad("force_cap must be positive");
  try {
    gains.validate();
    tissue.validate();
    agent.validate();
    avatar.validate();
  } catch (const Error& e) {
    bad(e.what());
  }
}

// --- events ------------------------------------------------------------------

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::PhaseChange: return "phase_change";
    case EventKind::Utterance: return "utterance";
    case EventKind::RobotState: return "robot_state";
    case EventKind::SafetyAbort: return "safety_abort";
    case EventKind::Command: return "command";
  }
  return "unknown";
}

nlohmann::json event_to_json(const SessionEvent& e) {
  nlohmann::json payload = std::visit(
      Overloaded{
          [](const PhaseChangeEvent& p) -> nlohmann::json {
            return {{"from", to_string(p.from)}, {"to", to_string(p.to)}, {"cause", p.cause}};
          },
          [](const UtteranceEvent& u) -> nlohmann::json {
            nlohmann::json j = {{"speaker", to_string(u.utterance.speaker)},
                                {"text", u.utterance.text},
                                {"timestamp", u.utterance.timestamp},
                                {"announcement", u.announcement}};
            if (u.latency) {
              j["latency_ms"] = {{"stt", u.latency->stt_ms},
                                 {"llm", u.latency->llm_ms},
                                 {"tts", u.latency->tts_ms}};
            }
            if (u.head_rotation) j["head_rotation_wxyz"] = rotation_to_json(*u.head_rotation);
            return j;
          },
          [](const RobotStateEvent& r) -> nlohmann::json {
            nlohmann::json j = {{"phase", to_string(r.phase)},
                                {"probe_pose", pose_to_json(r.probe_pose)},
                                {"contact_force", r.contact_force},
                                {"penetration_m", r.penetration},
                                {"reach_engaged", r.reach_engaged}};
            if (r.wrist_position) j["wrist"] = vec3_to_json(*r.wrist_position);
            return j;
          },
          [](const SafetyAbortEvent& s) -> nlohmann::json {
            return {{"contact_force", s.contact_force}, {"cap", s.cap}};
          },
          [](const CommandEvent& c) -> nlohmann::json {
            return {{"command", c.command},
                    {"source", c.source},
                    {"accepted", c.accepted},
                    {"reason", c.reason}};
          },
      },
      e.payload);
  return {{"t_s", e.timestamp}, {"kind", to_string(e.kind())}, {"payload", std::move(payload)}};
}

SessionEvent event_from_json(const nlohmann::json& j) {
  try {
    SessionEvent e;
    e.timestamp = j.at("t_s").get<double>();
    const auto kind = j.at("kind").get<std::string>();
    const auto& p = j.at("payload");
    if (kind == "phase_change") {
      e.payload = PhaseChangeEvent{phase_from_string(p.at("from").get<std::string>()),
                                   phase_from_string(p.at("to").get<std::string>()),
                                   p.at("cause").get<std::string>()};
    } else if (kind == "utterance") {
      UtteranceEvent u;
      u.utterance = {speaker_from_string(p.at("speaker").get<std::string>()),
                     p.at("text").get<std::string>(), p.at("timestamp").get<double>()};
      u.announcement = p.at("announcement").get<bool>();
      if (p.contains("latency_ms")) {
        const auto& l = p.at("latency_ms");
        u.latency = StageLatency{l.at("stt").get<double>(), l.at("llm").get<double>(),
                                 l.at("tts").get<double>()};
      }
      if (p.contains("head_rotation_wxyz")) {
        u.head_rotation = rotation_from_json(p.at("head_rotation_wxyz"));
      }
      e.payload = std::move(u);
    } else if (kind == "robot_state") {
      RobotStateEvent r;
      r.phase = phase_from_string(p.at("phase").get<std::string>());
      r.probe_pose = pose_from_json(p.at("probe_pose"));
      r.contact_force = p.at("contact_force").get<double>();
      r.penetration = p.at("penetration_m").get<double>();
      r.reach_engaged = p.at("reach_engaged").get<bool>();
      if (p.contains("wrist")) r.wrist_position = vec3_from_json(p.at("wrist"), "wrist");
      e.payload = r;
    } else if (kind == "safety_abort") {
      e.payload = SafetyAbortEvent{p.at("contact_force").get<double>(), p.at("cap").get<double>()};
    } else if (kind == "command") {
      e.payload = CommandEvent{p.at("command").get<std::string>(), p.at("source").get<std::string>(),
                               p.at("accepted").get<bool>(), p.at("reason").get<std::string>()};
    } else {
      fail(ErrorCode::MalformedLog, "unknown event kind '" + kind + "'");
    }
    return e;
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorCode::MalformedLog, std::string("session event: ") + ex.what());
  }
}

nlohmann::json snapshot(const SessionState& s) {
  auto transcript = nlohmann::json::array();
  for (const auto& u : s.transcript) {
    transcript.push_back({{"speaker", to_string(u.speaker)}, {"text", u.text}, {"t", u.timestamp}});
  }
  return {
      {"phase", to_string(s.phase)},
      {"tick", s.tick},
      {"time", s.time},
      {"phase_entered_at", s.phase_entered_at},
      {"scan_path", scan_path_to_json(s.scan_path)},
      {"segment", static_cast<int>(s.segment)},
      {"segment_path", scan_path_to_json(s.segment_path)},
      {"segment_started_at", s.segment_started_at},
      {"sim",
       {{"time", s.sim.time},
        {"probe_pose", pose_to_json(s.sim.probe_pose)},
        {"penetration", s.sim.penetration},
        {"penetration_rate", s.sim.penetration_rate},
        {"contact_force", s.sim.contact_force},
        {"axial_offset", s.sim.axial_offset},
        {"axial_velocity", s.sim.axial_velocity},
        {"q", vector_json(s.sim.joint_state.q)},
        {"qdot", vector_json(s.sim.joint_state.qdot)},
        {"torque", vector_json(s.sim.joint_torque)}}},
      {"reach_engaged", s.reach_engaged},
      {"wrist", s.wrist_position ? vec3_to_json(*s.wrist_position) : nlohmann::json()},
      {"start_commands_taken", s.start_commands_taken},
      {"utterance_count", s.utterance_count},
      {"transcript", std::move(transcript)},
      {"last_logged_bucket", s.last_logged_bucket},
      {"end_cause", s.end_cause},
      {"finished", s.finished},
  };
}

// --- orchestrator ------------------------------------------------------------

Orchestrator::Orchestrator(SessionConfig config, std::shared_ptr<const ResponseGenerator> generator)
    : config_(std::move(config)),
      agent_(config_.agent,
             generator ? std::move(generator) : std::make_shared<ScriptedGenerator>(config_.script)),
      passive_gains_(config_.gains) {
  config_.validate();
  passive_gains_.desired_wrench.setZero();
}

SessionState Orchestrator::initial_state() const {
  SessionState s;
  s.scan_path = config_.scan_path;
  s.segment_path = {config_.home_pose, config_.home_pose, config_.retract_speed};
  s.sim = make_initial_state(config_.sim, config_.home_pose, 0.0);
  return s;
}

void Orchestrator::change_phase(SessionState& s, ProcedurePhase to, const std::string& cause,
                                std::vector<SessionEvent>& out) const {
  const ProcedurePhase from = s.phase;
  Utterance announcement = phase_announcement(from, to, s.time);
  out.push_back({s.time, PhaseChangeEvent{from, to, cause}});
  out.push_back({s.time, UtteranceEvent{announcement, std::nullopt, true, std::nullopt}});
  remember(s, std::move(announcement));
  s.phase = to;
  s.phase_entered_at = s.time;
  if (is_terminal(to)) {
    s.end_cause = cause;
    if (s.segment == MotionSegment::Idle) s.finished = true;
  }
}

void Orchestrator::start_segment(SessionState& s, MotionSegment segment,
                                 const ScanPath& path) const {
  s.segment = segment;
  s.segment_path = path;
  s.segment_started_at = s.time;
}

void Orchestrator::begin_retract(SessionState& s) const {
  const Pose from = current_waypoint(s);
  start_segment(s, MotionSegment::Retract, {from, config_.home_pose, config_.retract_speed});
}

void Orchestrator::apply_command(SessionState& s, AgentCommand command, const std::string& source,
                                 std::vector<SessionEvent>& out, bool& rejected) const {
  const std::string name(to_string(command));
  auto reject = [&](const std::string& reason) {
    out.push_back({s.time, CommandEvent{name, source, false, reason}});
    rejected = true;
  };
  switch (command) {
    case AgentCommand::None:
      return;
    case AgentCommand::StartScan:
      if (s.phase != ProcedurePhase::Resting) {
        return reject("start_scan is not allowed in phase " + std::string(to_string(s.phase)));
      }
      if (s.start_commands_taken > 0) return reject("scan already started once");
      out.push_back({s.time, CommandEvent{name, source, true, ""}});
      ++s.start_commands_taken;
      change_phase(s, ProcedurePhase::Execution, source + "_start", out);
      start_segment(s, MotionSegment::Approach,
                    {s.sim.probe_pose, s.scan_path.start_pose, config_.approach_speed});
      return;
    case AgentCommand::StopScan:
      if (s.phase != ProcedurePhase::Resting && s.phase != ProcedurePhase::Execution) {
        return reject("stop_scan is not allowed in phase " + std::string(to_string(s.phase)));
      }
      out.push_back({s.time, CommandEvent{name, source, true, ""}});
      if (s.phase == ProcedurePhase::Execution) begin_retract(s);
      change_phase(s, ProcedurePhase::Aborted, "stop_requested", out);
      return;
  }
}

void Orchestrator::log_robot_state(const SessionState& s, std::vector<SessionEvent>& out) const {
  RobotStateEvent r;
  r.phase = s.phase;
  r.probe_pose = s.sim.probe_pose;
  r.contact_force = s.sim.contact_force;
  r.penetration = s.sim.penetration;
  r.reach_engaged = s.reach_engaged;
  r.wrist_position = s.wrist_position;
  out.push_back({s.time, r});
}

void Orchestrator::tick(SessionState& s, std::vector<SessionEvent>& out) const {
  const double rate = static_cast<double>(config_.tick_rate);
  const double dt = 1.0 / rate;
  ++s.tick;
  s.time = static_cast<double>(s.tick) / rate;

  if (s.segment == MotionSegment::Idle) {
    s.sim.time = s.time;
  } else {
    const ImpedanceGains& gains =
        s.segment == MotionSegment::Scan ? config_.gains : passive_gains_;
    // The axial integrator needs D_ax*h/m_v < 2; slow tick rates are sub-stepped.
    const int substeps = static_cast<int>(std::ceil(dt / kMaxPhysicsStep - 1e-9));
    const double h = dt / substeps;
    const double t0 = static_cast<double>(s.tick - 1) / rate;
    for (int i = 0; i < substeps; ++i) {
      s.sim.time = t0 + i * h;
      s.sim = step_simulation(s.sim, gains, config_.tissue, s.segment_path, s.segment_started_at, h,
                              config_.sim);
    }
    s.sim.time = s.time;
  }

  const ReachUpdate reach =
      update_reach_behavior(config_.avatar, s.sim.probe_pose.position, s.reach_engaged);
  s.reach_engaged = reach.engaged;
  s.wrist_position =
      reach.solution ? std::optional<Vec3>(reach.solution->wrist_position) : std::nullopt;

  if (s.phase == ProcedurePhase::Execution && exceeds_force_cap(s.sim, config_.sim)) {
    out.push_back({s.time, SafetyAbortEvent{s.sim.contact_force, config_.sim.force_cap}});
    begin_retract(s);
    change_phase(s, ProcedurePhase::Aborted, "safety_force_cap", out);
  }

  const double segment_t = s.time - s.segment_started_at;
  switch (s.segment) {
    case MotionSegment::Idle:
      break;
    case MotionSegment::Approach:
      if (segment_t >= s.segment_path.duration()) {
        start_segment(s, MotionSegment::Scan, s.scan_path);
      }
      break;
    case MotionSegment::Scan:
      if (segment_t >= s.segment_path.duration()) {
        begin_retract(s);
        change_phase(s, ProcedurePhase::Complete, "scan_path_completed", out);
      }
      break;
    case MotionSegment::Retract: {
      const bool path_done = segment_t >= s.segment_path.duration();
      const bool relaxed = std::abs(s.sim.axial_offset) < kRestOffset &&
                           std::abs(s.sim.axial_velocity) < kRestVelocity;
      if (path_done && (relaxed || segment_t >= s.segment_path.duration() + kRetractGrace)) {
        s.segment = MotionSegment::Idle;
        if (is_terminal(s.phase)) s.finished = true;
      }
      break;
    }
  }

  const double in_phase = s.time - s.phase_entered_at;
  if (s.phase == ProcedurePhase::Greeting && in_phase >= config_.greeting_s) {
    change_phase(s, ProcedurePhase::Resting, "greeting_done", out);
  } else if (s.phase == ProcedurePhase::Resting && in_phase >= config_.resting_timeout_s) {
    change_phase(s, ProcedurePhase::Aborted, "timeout", out);
  }

  if (!s.finished && s.time >= config_.max_session_s) {
    s.finished = true;
    s.end_cause = "session_limit";
  }

  const std::int64_t bucket = s.tick * kLogRateHz / config_.tick_rate;
  if (bucket != s.last_logged_bucket || s.finished) {
    s.last_logged_bucket = bucket;
    log_robot_state(s, out);
  }
}

Transition Orchestrator::handle_event(const SessionState& state, const SessionInput& input) const {
  Transition tr{state, {}, false};
  SessionState& s = tr.state;
  if (s.finished) {
    tr.rejected = !std::holds_alternative<AdvanceTo>(input);
    return tr;
  }

  std::visit(
      Overloaded{
          [&](const SetScanPath& in) {
            const bool allowed =
                s.phase == ProcedurePhase::Setup || s.phase == ProcedurePhase::Resting;
            if (!allowed || !(in.path.speed > 0.0)) {
              tr.events.push_back({s.time, CommandEvent{"set_path", "operator", false,
                                                        allowed ? "scan speed must be positive"
                                                                : "set_path is only allowed "
                                                                  "before the scan"}});
              tr.rejected = true;
              return;
            }
            s.scan_path = in.path;
            tr.events.push_back({s.time, CommandEvent{"set_path", "operator", true, ""}});
          },
          [&](const BeginSession&) {
            if (s.phase != ProcedurePhase::Setup) {
              tr.rejected = true;
              return;
            }
            change_phase(s, ProcedurePhase::Greeting, "session_started", tr.events);
          },
          [&](const PatientSpeech& in) {
            Utterance u{Speaker::Patient, in.text, s.time};
            try {
              validate(u);
            } catch (const Error&) {
              tr.rejected = true;
              return;
            }
            std::optional<Rotation> gaze;
            if (distance(config_.patient_head, config_.avatar.head_position) > 1e-12) {
              gaze = look_at(config_.avatar, config_.patient_head);
            }
            tr.events.push_back({s.time, UtteranceEvent{u, std::nullopt, false, gaze}});
            if (s.phase == ProcedurePhase::Setup) {
              remember(s, std::move(u));
              return;
            }
            const std::vector<Utterance> window(s.transcript.begin(), s.transcript.end());
            const AgentReply reply = agent_.handle_utterance(
                s.phase, u, utterance_seed(config_.seed, s.utterance_count), window);
            ++s.utterance_count;
            remember(s, u);
            Utterance said{Speaker::Agent, reply.text, s.time};
            tr.events.push_back({s.time, UtteranceEvent{said, reply.latency, false, gaze}});
            remember(s, std::move(said));
            bool ignored = false;
            apply_command(s, reply.command, "agent", tr.events, ignored);
          },
          [&](const OperatorCommand& in) {
            SessionState before = s;
            apply_command(s, in.command, "operator", tr.events, tr.rejected);
            if (tr.rejected) s = std::move(before);
          },
          [&](const AdvanceTo& in) {
            const double rate = static_cast<double>(config_.tick_rate);
            while (!s.finished && static_cast<double>(s.tick + 1) / rate <= in.time + 1e-9) {
              tick(s, tr.events);
            }
          },
      },
      input);
  return tr;
}

// --- drivers -----------------------------------------------------------------

SessionLog run_session(const SessionConfig& config, const std::vector<ScheduledUtterance>& schedule,
                       const RunOptions& options) {
  const Orchestrator orchestrator(config);
  SessionLog log;
  SessionState state = orchestrator.initial_state();
  auto feed = [&](SessionInput input) {
    if (state.finished) return;
    Transition tr = orchestrator.handle_event(state, input);
    log.inputs.push_back(std::move(input));
    state = std::move(tr.state);
    log.events.insert(log.events.end(), std::make_move_iterator(tr.events.begin()),
                      std::make_move_iterator(tr.events.end()));
  };

  feed(SetScanPath{config.scan_path});
  feed(AdvanceTo{options.setup_s});
  feed(BeginSession{});
  std::vector<ScheduledUtterance> ordered = schedule;
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return a.t_s < b.t_s; });
  for (const auto& u : ordered) {
    feed(AdvanceTo{u.t_s});
    feed(PatientSpeech{u.text});
  }
  feed(AdvanceTo{config.max_session_s});
  log.final_state = std::move(state);
  return log;
}

SessionState replay(const Orchestrator& orchestrator, const std::vector<SessionInput>& inputs) {
  SessionState state = orchestrator.initial_state();
  for (const auto& input : inputs) state = orchestrator.handle_event(state, input).state;
  return state;
}

// --- log views ---------------------------------------------------------------

std::vector<PhaseInterval> phase_intervals(const std::vector<SessionEvent>& log) {
  if (log.empty()) fail(ErrorCode::MalformedLog, "empty session log");
  std::vector<PhaseInterval> out;
  PhaseInterval current{ProcedurePhase::Setup, log.front().timestamp, log.front().timestamp};
  double last_t = log.front().timestamp;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& e = log[i];
    if (!(e.timestamp >= last_t)) {
      fail(ErrorCode::MalformedLog, "timestamps decrease at event " + std::to_string(i));
    }
    last_t = e.timestamp;
    if (const auto* pc = std::get_if<PhaseChangeEvent>(&e.payload)) {
      if (pc->from != current.phase || !is_valid_transition(pc->from, pc->to)) {
        fail(ErrorCode::MalformedLog, "inconsistent phase change at event " + std::to_string(i));
      }
      current.t_end = e.timestamp;
      out.push_back(current);
      current = {pc->to, e.timestamp, e.timestamp};
    }
  }
  current.t_end = last_t;
  out.push_back(current);
  return out;
}

std::string phase_intervals_csv(const std::vector<PhaseInterval>& intervals) {
  std::ostringstream out;
  out << "phase,t_start,t_end\n";
  for (const auto& iv : intervals) {
    out << to_string(iv.phase) << ',' << csv::format_double(iv.t_start) << ','
        << csv::format_double(iv.t_end) << '\n';
  }
  return out.str();
}

std::vector<PhaseInterval> parse_phase_intervals_csv(std::string_view text) {
  const csv::Table table = csv::parse(text);
  const auto c_phase = table.column("phase");
  const auto c_start = table.column("t_start");
  const auto c_end = table.column("t_end");
  std::vector<PhaseInterval> out;
  for (const auto& row : table.rows) {
    PhaseInterval iv;
    try {
      iv.phase = phase_from_string(row.fields[c_phase]);
    } catch (const Error& e) {
      fail(ErrorCode::ParseError, "line " + std::to_string(row.line) + ": " + e.what());
    }
    iv.t_start = csv::to_double(row.fields[c_start], row.line);
    iv.t_end = csv::to_double(row.fields[c_end], row.line);
    if (iv.t_end < iv.t_start) {
      fail(ErrorCode::ParseError, "line " + std::to_string(row.line) + ": t_end < t_start");
    }
    out.push_back(iv);
  }
  return out;
}

std::string session_log_jsonl(const std::vector<SessionEvent>& log) {
  std::string out;
  for (const auto& e : log) {
    out += event_to_json(e).dump();
    out += '\n';
  }
  return out;
}

std::vector<SessionEvent> parse_session_log_jsonl(std::string_view text) {
  std::vector<SessionEvent> out;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const auto line = text.substr(start, end - start);
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(event_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::MalformedLog, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string simulation_csv(const std::vector<SessionEvent>& log) {
  std::ostringstream out;
  out << "t_s,px,py,pz,delta_m,force_n,phase\n";
  for (const auto& e : log) {
    const auto* r = std::get_if<RobotStateEvent>(&e.payload);
    if (!r) continue;
    const Vec3& p = r->probe_pose.position;
    out << csv::format_double(e.timestamp) << ',' << csv::format_double(p.x) << ','
        << csv::format_double(p.y) << ',' << csv::format_double(p.z) << ','
        << csv::format_double(r->penetration) << ',' << csv::format_double(r->contact_force)
        << ',' << to_string(r->phase) << '\n';
  }
  return out.str();
}

}  // namespace sono
