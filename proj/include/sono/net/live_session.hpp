#pragma once

#include <atomic>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include "sono/orchestrator.hpp"
#include "sono/protocol.hpp"

namespace sono::net {

// Maps an inbound wire message onto an orchestrator input. RobotState,
// UltrasoundFrame, Heartbeat and agent-spoken events map to nothing.
std::optional<SessionInput> to_session_input(const protocol::Message& m);

struct LiveOptions {
  double broadcast_hz = 50.0;
  double frame_hz = 5.0;  // stub ultrasound frames during Execution
  std::uint32_t frame_width = 64;
  std::uint32_t frame_height = 48;
  double heartbeat_s = 1.0;
  double setup_s = 2.0;
  // Hold each agent reply back by its sampled pipeline latency instead of
  // sending it on the tick that produced it.
  bool realtime_latency = false;
};

// Owns the session state and runs the single event loop. Inputs from any
// thread go through submit(); outbound messages reach the sinks from the
// loop thread in session order.
class LiveSession {
 public:
  using Sink = std::function<void(const protocol::Message&)>;

  explicit LiveSession(SessionConfig config, LiveOptions options = {});
  ~LiveSession();
  LiveSession(const LiveSession&) = delete;
  LiveSession& operator=(const LiveSession&) = delete;

  void add_sink(Sink sink);  // before start()
  void submit(SessionInput input);

  // Wall-clock loop on a background thread.
  void start();
  void stop();

  // Manual stepping for tests: applies queued inputs, then advances the
  // session clock to `t` and broadcasts once.
  void step_to(double t);

  ProcedurePhase phase() const { return phase_.load(); }
  bool finished() const { return finished_.load(); }
  double time() const;
  std::vector<SessionEvent> events() const;
  std::vector<SessionInput> inputs() const;
  SessionState state() const;

 private:
  void apply(const SessionInput& input, std::vector<SessionEvent>& fresh);
  void publish(const std::vector<SessionEvent>& fresh);
  void run();

  Orchestrator orchestrator_;
  LiveOptions options_;
  std::vector<Sink> sinks_;

  mutable std::mutex mutex_;  // guards state_, log_, inputs_, queue_
  std::condition_variable wake_;
  SessionState state_;
  std::vector<SessionEvent> log_;
  std::vector<SessionInput> inputs_;
  std::vector<SessionInput> queue_;
  bool begun_ = false;

  double last_broadcast_t_ = -1.0;
  double last_frame_t_ = -1.0;
  double last_heartbeat_t_ = -1.0;
  std::uint32_t frame_seq_ = 0;
  std::vector<std::pair<double, protocol::Message>> held_;  // (release time, reply)

  std::atomic<ProcedurePhase> phase_{ProcedurePhase::Setup};
  std::atomic<bool> finished_{false};
  std::atomic<bool> stop_requested_{false};
  std::thread thread_;
};

}  // namespace sono::net
