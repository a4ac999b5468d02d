#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sono/agent.hpp"
#include "sono/phase.hpp"
#include "sono/simulation.hpp"
#include "sono/spatial.hpp"

namespace sono::protocol {

inline constexpr std::size_t kMaxPayload = 16u * 1024u * 1024u;
inline constexpr std::size_t kHeaderSize = 5;
inline constexpr std::size_t kFrameHeaderSize = 16;  // ultrasound frame sub-header

enum class MessageType : std::uint8_t {
  RobotState = 0x01,
  Command = 0x02,
  AgentEvent = 0x03,
  UltrasoundFrame = 0x04,
  Heartbeat = 0x05,
};

struct RobotStateMsg {
  double t = 0.0;
  Pose probe_pose;
  double contact_force = 0.0;  // N, >= 0
  ProcedurePhase phase = ProcedurePhase::Setup;

  bool operator==(const RobotStateMsg&) const = default;
};

enum class CommandKind { StartScan, StopScan, SetPath };

std::string_view to_string(CommandKind k);
CommandKind command_kind_from_string(std::string_view name);

struct CommandMsg {
  CommandKind cmd = CommandKind::StartScan;
  std::optional<ScanPath> path;  // SetPath only

  bool operator==(const CommandMsg&) const = default;
};

struct AgentEventMsg {
  Utterance utterance;

  bool operator==(const AgentEventMsg&) const = default;
};

struct UltrasoundFrameMsg {
  std::uint32_t seq = 0;
  std::uint32_t t_ms = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, width * height bytes

  bool operator==(const UltrasoundFrameMsg&) const = default;
};

struct HeartbeatMsg {
  bool operator==(const HeartbeatMsg&) const = default;
};

using Message =
    std::variant<RobotStateMsg, CommandMsg, AgentEventMsg, UltrasoundFrameMsg, HeartbeatMsg>;

MessageType type_of(const Message& m);

// Throws InvalidArgument when a message invariant fails and OversizePayload
// when the payload would exceed kMaxPayload.
std::vector<std::uint8_t> encode_frame(const Message& m);

// JSON object for the text-payload types (everything but UltrasoundFrame).
std::string payload_text(const Message& m);
Message decode_payload(MessageType type, std::span<const std::uint8_t> payload);

struct Diagnostic {
  std::uint8_t type_id = 0;
  std::size_t payload_length = 0;
  std::string message;
};

// Incremental frame reassembly. Never buffers more than one frame.
class FrameDecoder {
 public:
  explicit FrameDecoder(std::size_t max_payload = kMaxPayload);

  // Returns every message completed by `chunk`, in order. Unknown type ids
  // skip the frame and record a diagnostic. Throws CorruptLength for a
  // length prefix above the limit and MalformedPayload for a payload that
  // does not parse; both leave the decoder unusable.
  std::vector<Message> feed(std::span<const std::uint8_t> chunk);

  std::size_t buffered() const { return buffer_.size(); }
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::size_t max_payload_;
  std::vector<std::uint8_t> buffer_;
  std::size_t skip_remaining_ = 0;
  bool poisoned_ = false;
  std::vector<Diagnostic> diagnostics_;
};

// Stub ultrasound image: a depth gradient with a bright band at the
// simulated tissue contact depth.
UltrasoundFrameMsg synthetic_frame(std::uint32_t seq, double t_s, std::uint32_t width,
                                   std::uint32_t height, double penetration_m);

RobotStateMsg robot_state_message(const SimState& s, ProcedurePhase phase);

}  // namespace sono::protocol
