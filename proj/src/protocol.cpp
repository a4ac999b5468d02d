#include "sono/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "sono/error.hpp"
#include "sono/json_io.hpp"

namespace sono::protocol {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

bool known_type(std::uint8_t id) { return id >= 0x01 && id <= 0x05; }

nlohmann::json utterance_json(const Utterance& u) {
  return {{"speaker", to_string(u.speaker)}, {"text", u.text}, {"timestamp", u.timestamp}};
}

void check(const Message& m) {
  std::visit(Overloaded{
                 [](const RobotStateMsg& r) {
                   if (!(r.contact_force >= 0.0) || !std::isfinite(r.contact_force)) {
                     fail(ErrorCode::InvalidArgument, "robot state force must be finite and >= 0");
                   }
                 },
                 [](const CommandMsg& c) {
                   if ((c.cmd == CommandKind::SetPath) != c.path.has_value()) {
                     fail(ErrorCode::InvalidArgument, "set_path and only set_path carries a path");
                   }
                 },
                 [](const UltrasoundFrameMsg& f) {
                   if (std::uint64_t{f.width} * f.height != f.pixels.size()) {
                     fail(ErrorCode::InvalidArgument, "frame pixel count != width * height");
                   }
                 },
                 [](const auto&) {},
             },
             m);
}

}  // namespace

std::string_view to_string(CommandKind k) {
  switch (k) {
    case CommandKind::StartScan: return "start_scan";
    case CommandKind::StopScan: return "stop_scan";
    case CommandKind::SetPath: return "set_path";
  }
  return "start_scan";
}

CommandKind command_kind_from_string(std::string_view name) {
  if (name == "start_scan") return CommandKind::StartScan;
  if (name == "stop_scan") return CommandKind::StopScan;
  if (name == "set_path") return CommandKind::SetPath;
  fail(ErrorCode::ParseError, "unknown command '" + std::string(name) + "'");
}

MessageType type_of(const Message& m) {
  return static_cast<MessageType>(static_cast<std::uint8_t>(m.index() + 1));
}

std::string payload_text(const Message& m) {
  const nlohmann::json j = std::visit(
      Overloaded{
          [](const RobotStateMsg& r) -> nlohmann::json {
            return {{"t", r.t},
                    {"probe_pose", pose_to_json(r.probe_pose)},
                    {"contact_force", r.contact_force},
                    {"phase", to_string(r.phase)}};
          },
          [](const CommandMsg& c) -> nlohmann::json {
            nlohmann::json j = {{"cmd", to_string(c.cmd)}};
            if (c.path) j["path"] = scan_path_to_json(*c.path);
            return j;
          },
          [](const AgentEventMsg& a) -> nlohmann::json {
            return {{"utterance", utterance_json(a.utterance)}};
          },
          [](const UltrasoundFrameMsg& f) -> nlohmann::json {
            return {{"seq", f.seq}, {"t_ms", f.t_ms}, {"width", f.width}, {"height", f.height}};
          },
          [](const HeartbeatMsg&) -> nlohmann::json { return nlohmann::json::object(); },
      },
      m);
  try {
    return j.dump();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("payload is not valid UTF-8: ") + e.what());
  }
}

std::vector<std::uint8_t> encode_frame(const Message& m) {
  check(m);
  std::vector<std::uint8_t> out;
  if (const auto* f = std::get_if<UltrasoundFrameMsg>(&m)) {
    const std::size_t len = kFrameHeaderSize + f->pixels.size();
    if (len > kMaxPayload) fail(ErrorCode::OversizePayload, "ultrasound frame exceeds 16 MiB");
    out.reserve(kHeaderSize + len);
    put_u32(out, static_cast<std::uint32_t>(len));
    out.push_back(static_cast<std::uint8_t>(MessageType::UltrasoundFrame));
    put_u32(out, f->seq);
    put_u32(out, f->t_ms);
    put_u32(out, f->width);
    put_u32(out, f->height);
    out.insert(out.end(), f->pixels.begin(), f->pixels.end());
    return out;
  }
  const std::string text = std::holds_alternative<HeartbeatMsg>(m) ? std::string() : payload_text(m);
  if (text.size() > kMaxPayload) fail(ErrorCode::OversizePayload, "payload exceeds 16 MiB");
  out.reserve(kHeaderSize + text.size());
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.push_back(static_cast<std::uint8_t>(type_of(m)));
  out.insert(out.end(), text.begin(), text.end());
  return out;
}

Message decode_payload(MessageType type, std::span<const std::uint8_t> payload) {
  if (type == MessageType::UltrasoundFrame) {
    if (payload.size() < kFrameHeaderSize) {
      fail(ErrorCode::MalformedPayload, "ultrasound frame shorter than its header");
    }
    UltrasoundFrameMsg f;
    f.seq = get_u32(payload.data());
    f.t_ms = get_u32(payload.data() + 4);
    f.width = get_u32(payload.data() + 8);
    f.height = get_u32(payload.data() + 12);
    if (std::uint64_t{f.width} * f.height != payload.size() - kFrameHeaderSize) {
      fail(ErrorCode::MalformedPayload, "ultrasound frame pixel count != width * height");
    }
    f.pixels.assign(payload.begin() + kFrameHeaderSize, payload.end());
    return f;
  }
  if (type == MessageType::Heartbeat && payload.empty()) return HeartbeatMsg{};

  try {
    const auto j = nlohmann::json::parse(payload.begin(), payload.end());
    if (!j.is_object()) fail(ErrorCode::MalformedPayload, "payload is not a JSON object");
    switch (type) {
      case MessageType::RobotState: {
        RobotStateMsg r;
        r.t = j.at("t").get<double>();
        r.probe_pose = pose_from_json(j.at("probe_pose"));
        r.contact_force = j.at("contact_force").get<double>();
        r.phase = phase_from_string(j.at("phase").get<std::string>());
        if (!(r.contact_force >= 0.0)) fail(ErrorCode::MalformedPayload, "negative contact force");
        return r;
      }
      case MessageType::Command: {
        CommandMsg c;
        c.cmd = command_kind_from_string(j.at("cmd").get<std::string>());
        if (c.cmd == CommandKind::SetPath) c.path = scan_path_from_json(j.at("path"));
        return c;
      }
      case MessageType::AgentEvent: {
        const auto& u = j.at("utterance");
        return AgentEventMsg{{speaker_from_string(u.at("speaker").get<std::string>()),
                              u.at("text").get<std::string>(), u.at("timestamp").get<double>()}};
      }
      case MessageType::Heartbeat:
        return HeartbeatMsg{};
      case MessageType::UltrasoundFrame:
        break;
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedPayload, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedPayload) throw;
    fail(ErrorCode::MalformedPayload, e.what());
  }
  fail(ErrorCode::UnknownType, "unhandled message type");
}

FrameDecoder::FrameDecoder(std::size_t max_payload) : max_payload_(max_payload) {}

std::vector<Message> FrameDecoder::feed(std::span<const std::uint8_t> chunk) {
  if (poisoned_) fail(ErrorCode::CorruptLength, "decoder failed earlier; stream is unusable");
  std::vector<Message> out;
  std::size_t pos = 0;
  while (pos < chunk.size()) {
    if (skip_remaining_ > 0) {
      const std::size_t n = std::min(skip_remaining_, chunk.size() - pos);
      skip_remaining_ -= n;
      pos += n;
      continue;
    }
    const std::size_t want =
        buffer_.size() < kHeaderSize ? kHeaderSize : kHeaderSize + get_u32(buffer_.data());
    const std::size_t n = std::min(want - buffer_.size(), chunk.size() - pos);
    buffer_.insert(buffer_.end(), chunk.begin() + static_cast<std::ptrdiff_t>(pos),
                   chunk.begin() + static_cast<std::ptrdiff_t>(pos + n));
    pos += n;
    if (buffer_.size() < want) break;

    const std::size_t len = get_u32(buffer_.data());
    const std::uint8_t id = buffer_[4];
    if (want == kHeaderSize) {
      if (len > max_payload_) {
        poisoned_ = true;
        fail(ErrorCode::CorruptLength,
             "frame length " + std::to_string(len) + " exceeds " + std::to_string(max_payload_));
      }
      if (!known_type(id)) {
        diagnostics_.push_back({id, len, "unknown message type " + std::to_string(id)});
        buffer_.clear();
        skip_remaining_ = len;
        continue;
      }
      if (len > 0) continue;
    }
    try {
      out.push_back(decode_payload(static_cast<MessageType>(id),
                                   std::span<const std::uint8_t>(buffer_).subspan(kHeaderSize)));
    } catch (const Error&) {
      poisoned_ = true;
      throw;
    }
    buffer_.clear();
  }
  return out;
}

UltrasoundFrameMsg synthetic_frame(std::uint32_t seq, double t_s, std::uint32_t width,
                                   std::uint32_t height, double penetration_m) {
  UltrasoundFrameMsg f;
  f.seq = seq;
  f.t_ms = static_cast<std::uint32_t>(std::clamp(std::llround(t_s * 1000.0), 0LL, 0xffffffffLL));
  f.width = width;
  f.height = height;
  f.pixels.resize(std::size_t{width} * height);
  // Band sits a few rows below the top and drifts down with penetration.
  const double band = 0.15 * height + std::min(penetration_m * 1e5, 0.5 * height);
  for (std::uint32_t r = 0; r < height; ++r) {
    const double attenuation = 1.0 - static_cast<double>(r) / std::max<std::uint32_t>(height, 1);
    const double bright = std::exp(-0.5 * std::pow((r - band) / 2.0, 2.0));
    for (std::uint32_t c = 0; c < width; ++c) {
      const double speckle = static_cast<double>((r * 31u + c * 17u + seq * 13u) % 23u) / 23.0;
      const double v = 255.0 * std::clamp(0.6 * bright + 0.3 * attenuation * speckle, 0.0, 1.0);
      f.pixels[std::size_t{r} * width + c] = static_cast<std::uint8_t>(v);
    }
  }
  return f;
}

RobotStateMsg robot_state_message(const SimState& s, ProcedurePhase phase) {
  return {s.time, s.probe_pose, std::max(0.0, s.contact_force), phase};
}

}  // namespace sono::protocol
