#include "sono/net/live_session.hpp"

#include <chrono>
#include <spdlog/spdlog.h>

namespace sono::net {

std::optional<SessionInput> to_session_input(const protocol::Message& m) {
  if (const auto* c = std::get_if<protocol::CommandMsg>(&m)) {
    switch (c->cmd) {
      case protocol::CommandKind::StartScan: return OperatorCommand{AgentCommand::StartScan};
      case protocol::CommandKind::StopScan: return OperatorCommand{AgentCommand::StopScan};
      case protocol::CommandKind::SetPath:
        if (c->path) return SetScanPath{*c->path};
        return std::nullopt;
    }
  }
  if (const auto* a = std::get_if<protocol::AgentEventMsg>(&m)) {
    if (a->utterance.speaker == Speaker::Patient) return PatientSpeech{a->utterance.text};
  }
  return std::nullopt;
}

LiveSession::LiveSession(SessionConfig config, LiveOptions options)
    : orchestrator_(std::move(config)), options_(options), state_(orchestrator_.initial_state()) {
  std::vector<SessionEvent> fresh;
  apply(SetScanPath{orchestrator_.config().scan_path}, fresh);
  log_.insert(log_.end(), fresh.begin(), fresh.end());
}

LiveSession::~LiveSession() { stop(); }

void LiveSession::add_sink(Sink sink) { sinks_.push_back(std::move(sink)); }

void LiveSession::submit(SessionInput input) {
  {
    std::lock_guard lock(mutex_);
    queue_.push_back(std::move(input));
  }
  wake_.notify_all();
}

void LiveSession::apply(const SessionInput& input, std::vector<SessionEvent>& fresh) {
  if (state_.finished) return;
  Transition tr = orchestrator_.handle_event(state_, input);
  inputs_.push_back(input);
  if (tr.rejected) spdlog::info("input rejected in phase {}", to_string(state_.phase));
  state_ = std::move(tr.state);
  fresh.insert(fresh.end(), tr.events.begin(), tr.events.end());
}

void LiveSession::step_to(double t) {
  std::vector<SessionEvent> fresh;
  std::vector<SessionInput> pending;
  {
    std::lock_guard lock(mutex_);
    pending.swap(queue_);
    if (!begun_ && t >= options_.setup_s) {
      apply(AdvanceTo{options_.setup_s}, fresh);
      apply(BeginSession{}, fresh);
      begun_ = true;
    }
    for (const auto& input : pending) apply(input, fresh);
    apply(AdvanceTo{t}, fresh);
    log_.insert(log_.end(), fresh.begin(), fresh.end());
    phase_.store(state_.phase);
    finished_.store(state_.finished);
  }
  publish(fresh);
}

void LiveSession::publish(const std::vector<SessionEvent>& fresh) {
  SimState sim;
  ProcedurePhase phase;
  double now;
  {
    std::lock_guard lock(mutex_);
    sim = state_.sim;
    phase = state_.phase;
    now = state_.time;
  }
  std::vector<protocol::Message> out;
  for (const auto& e : fresh) {
    if (const auto* u = std::get_if<UtteranceEvent>(&e.payload)) {
      if (options_.realtime_latency && u->latency) {
        held_.emplace_back(e.timestamp + u->latency->total_ms() / 1000.0,
                           protocol::AgentEventMsg{u->utterance});
      } else {
        out.push_back(protocol::AgentEventMsg{u->utterance});
      }
    }
  }
  // Replies are held in log order and their release times need not be, so
  // release only from the front to keep delivery in session order.
  std::size_t released = 0;
  while (released < held_.size() && held_[released].first <= now) {
    out.push_back(std::move(held_[released].second));
    ++released;
  }
  held_.erase(held_.begin(), held_.begin() + static_cast<std::ptrdiff_t>(released));
  if (now > last_broadcast_t_) {
    out.push_back(protocol::robot_state_message(sim, phase));
    last_broadcast_t_ = now;
  }
  if (phase == ProcedurePhase::Execution && now - last_frame_t_ >= 1.0 / options_.frame_hz) {
    out.push_back(protocol::synthetic_frame(frame_seq_++, now, options_.frame_width,
                                            options_.frame_height, sim.penetration));
    last_frame_t_ = now;
  }
  if (now - last_heartbeat_t_ >= options_.heartbeat_s) {
    out.push_back(protocol::HeartbeatMsg{});
    last_heartbeat_t_ = now;
  }
  for (const auto& m : out) {
    for (const auto& sink : sinks_) sink(m);
  }
}

void LiveSession::start() {
  if (thread_.joinable()) return;
  stop_requested_ = false;
  thread_ = std::thread([this] { run(); });
}

void LiveSession::run() {
  using clock = std::chrono::steady_clock;
  const auto origin = clock::now();
  const auto period = std::chrono::duration<double>(1.0 / options_.broadcast_hz);
  auto next = origin;
  while (!stop_requested_ && !finished_) {
    next += std::chrono::duration_cast<clock::duration>(period);
    {
      std::unique_lock lock(mutex_);
      wake_.wait_until(lock, next, [this] { return stop_requested_.load(); });
    }
    if (stop_requested_) break;
    const double t = std::chrono::duration<double>(clock::now() - origin).count();
    step_to(t);
  }
  wake_.notify_all();
}

void LiveSession::stop() {
  stop_requested_ = true;
  wake_.notify_all();
  if (thread_.joinable() && thread_.get_id() != std::this_thread::get_id()) thread_.join();
}

double LiveSession::time() const {
  std::lock_guard lock(mutex_);
  return state_.time;
}

std::vector<SessionEvent> LiveSession::events() const {
  std::lock_guard lock(mutex_);
  return log_;
}

std::vector<SessionInput> LiveSession::inputs() const {
  std::lock_guard lock(mutex_);
  return inputs_;
}

SessionState LiveSession::state() const {
  std::lock_guard lock(mutex_);
  return state_;
}

}  // namespace sono::net
