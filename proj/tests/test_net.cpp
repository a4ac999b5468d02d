#include <doctest.h>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <thread>

#include <json.hpp>

#include "sono/error.hpp"
#include "sono/net/live_session.hpp"
#include "sono/net/tcp_server.hpp"
#include "sono/net/ws_bridge.hpp"

using namespace sono;
using namespace sono::protocol;
namespace asio = boost::asio;
using asio::ip::tcp;

namespace {

const std::string kSentinel = "end of test stream";

bool is_sentinel(const Message& m) {
  const auto* a = std::get_if<AgentEventMsg>(&m);
  return a && a->utterance.text == kSentinel;
}

// Blocking reader on its own thread; collects messages until the sentinel
// arrives or the socket closes.
class Reader {
 public:
  explicit Reader(std::uint16_t port) : socket_(io_) {
    socket_.connect({asio::ip::make_address("127.0.0.1"), port});
    thread_ = std::thread([this] {
      FrameDecoder decoder;
      std::array<std::uint8_t, 4096> buf{};
      boost::system::error_code ec;
      while (!done_) {
        const std::size_t n = socket_.read_some(asio::buffer(buf), ec);
        if (ec) break;
        for (auto& m : decoder.feed(std::span(buf.data(), n))) {
          if (is_sentinel(m)) done_ = true;
          else messages_.push_back(std::move(m));
        }
      }
      done_ = true;
    });
  }
  ~Reader() {
    boost::system::error_code ec;
    socket_.shutdown(tcp::socket::shutdown_both, ec);
    socket_.close(ec);
    if (thread_.joinable()) thread_.join();
  }

  void send(const std::vector<std::uint8_t>& bytes) { asio::write(socket_, asio::buffer(bytes)); }

  // Joins the reader; valid after the sentinel was broadcast.
  const std::vector<Message>& finish() {
    thread_.join();
    return messages_;
  }

  std::vector<RobotStateMsg> states() {
    std::vector<RobotStateMsg> out;
    for (const auto& m : finish())
      if (const auto* r = std::get_if<RobotStateMsg>(&m)) out.push_back(*r);
    return out;
  }

 private:
  asio::io_context io_;
  tcp::socket socket_;
  std::thread thread_;
  std::atomic<bool> done_{false};
  std::vector<Message> messages_;
};

struct Rig {
  asio::io_context io;
  net::LiveSession session{SessionConfig::defaults()};
  net::TcpServer server{io, net::parse_endpoint("127.0.0.1:0"), [this](const Message& m) {
                          if (auto in = net::to_session_input(m)) session.submit(*in);
                        }};
  asio::executor_work_guard<asio::io_context::executor_type> guard = asio::make_work_guard(io);
  std::thread io_thread{[this] { io.run(); }};
  double t = 0.0;

  Rig() {
    session.add_sink([this](const Message& m) { server.broadcast(m); });
  }
  ~Rig() {
    server.close();
    guard.reset();
    io.stop();
    io_thread.join();
  }

  void wait_clients(std::size_t n) {
    for (int i = 0; i < 500 && server.client_count() != n; ++i)
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    REQUIRE(server.client_count() == n);
  }

  void run_until(double until) {
    while (t < until) {
      t += 0.02;
      session.step_to(t);
    }
  }

  // Steps in small increments until `done` holds or the budget runs out.
  template <class Pred>
  bool step_while_waiting(Pred done) {
    for (int i = 0; i < 1000; ++i) {
      if (done()) return true;
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
      t += 0.002;
      session.step_to(t);
    }
    return done();
  }

  void end_stream() { server.broadcast(AgentEventMsg{{Speaker::Agent, kSentinel, 0.0}}); }
};

}  // namespace

TEST_SUITE("net") {

TEST_CASE("endpoint parsing") {
  CHECK(net::parse_endpoint("7400").port() == 7400);
  CHECK(net::parse_endpoint("0.0.0.0:81").address().to_string() == "0.0.0.0");
  CHECK_THROWS_AS(net::parse_endpoint("host:port"), Error);
  CHECK_THROWS_AS(net::parse_endpoint("127.0.0.1:99999"), Error);
}

TEST_CASE("wire messages map to session inputs") {
  CHECK(std::holds_alternative<OperatorCommand>(*net::to_session_input(CommandMsg{CommandKind::StartScan, {}})));
  const ScanPath p;
  CHECK(std::holds_alternative<SetScanPath>(*net::to_session_input(CommandMsg{CommandKind::SetPath, p})));
  CHECK(std::holds_alternative<PatientSpeech>(
      *net::to_session_input(AgentEventMsg{{Speaker::Patient, "hello", 0.0}})));
  CHECK_FALSE(net::to_session_input(AgentEventMsg{{Speaker::Agent, "hello", 0.0}}).has_value());
  CHECK_FALSE(net::to_session_input(HeartbeatMsg{}).has_value());
}

TEST_CASE("bridge text frames") {
  const auto cmd = net::bridge_text(CommandMsg{CommandKind::StartScan, {}});
  REQUIRE(cmd.has_value());
  CHECK(net::parse_bridge_text(*cmd) == Message{CommandMsg{CommandKind::StartScan, {}}});
  const auto chat = net::bridge_text(AgentEventMsg{{Speaker::Agent, "hi there", 3.0}});
  const auto back = std::get<AgentEventMsg>(net::parse_bridge_text(*chat));
  CHECK(back.utterance.speaker == Speaker::Agent);
  CHECK(back.utterance.text == "hi there");
  const auto state = nlohmann::json::parse(*net::bridge_text(
      RobotStateMsg{1.25, {{1, 2, 3}, Rotation()}, 7.5, ProcedurePhase::Execution}));
  CHECK(state.at("type") == "state");
  CHECK(state.at("phase") == "execution");
  CHECK(state.at("force_n") == 7.5);
  CHECK(state.at("probe") == nlohmann::json::array({1.0, 2.0, 3.0}));
  const auto frame = nlohmann::json::parse(*net::bridge_text(UltrasoundFrameMsg{1, 2, 1, 3, {0, 1, 2}}));
  CHECK(frame.at("pixels_b64") == "AAEC");
  CHECK_FALSE(net::bridge_text(HeartbeatMsg{}).has_value());
  const auto patient = std::get<AgentEventMsg>(net::parse_bridge_text(R"({"type":"chat","text":"please begin"})"));
  CHECK(patient.utterance.speaker == Speaker::Patient);
  CHECK_THROWS_AS(net::parse_bridge_text(R"({"type":"command","cmd":"set_path"})"), Error);
  CHECK_THROWS_AS(net::parse_bridge_text(R"({"type":"dance"})"), Error);
  CHECK_THROWS_AS(net::parse_bridge_text("nope"), Error);
}

TEST_CASE("live session stepping without clients") {
  net::LiveSession s(SessionConfig::defaults());
  std::vector<Message> out;
  s.add_sink([&](const Message& m) { out.push_back(m); });
  for (double t = 0.1; t < 10.0; t += 0.1) s.step_to(t);
  CHECK(s.phase() == ProcedurePhase::Resting);
  s.submit(OperatorCommand{AgentCommand::StartScan});
  s.step_to(10.1);
  CHECK(s.phase() == ProcedurePhase::Execution);
  int frames = 0;
  for (double t = 10.2; t < 12.0; t += 0.1) s.step_to(t);
  const auto before = out.size();
  CHECK(before > 0);
  s.step_to(12.0);
  for (const auto& m : out) frames += std::holds_alternative<UltrasoundFrameMsg>(m);
  CHECK(frames > 0);
  CHECK(snapshot(replay(Orchestrator(SessionConfig::defaults()), s.inputs())) == snapshot(s.state()));
}

TEST_CASE("realtime latency holds agent replies back") {
  net::LiveOptions options;
  options.realtime_latency = true;
  net::LiveSession s(SessionConfig::defaults(), options);
  std::vector<std::pair<double, Utterance>> replies;
  double now = 0.0;
  s.add_sink([&](const Message& m) {
    if (const auto* a = std::get_if<AgentEventMsg>(&m)) {
      if (a->utterance.speaker == Speaker::Agent) replies.emplace_back(now, a->utterance);
    }
  });
  for (now = 0.1; now < 8.0; now += 0.1) s.step_to(now);
  const auto announced = replies.size();
  s.submit(PatientSpeech{"how long does this take"});
  for (; now < 14.0; now += 0.1) s.step_to(now);
  REQUIRE(replies.size() == announced + 1);
  double latency_ms = 0.0;
  for (const auto& e : s.events()) {
    if (const auto* u = std::get_if<UtteranceEvent>(&e.payload)) {
      if (u->latency) latency_ms = u->latency->total_ms();
    }
  }
  const auto& [sent_at, reply] = replies.back();
  CHECK(latency_ms > 0.0);
  CHECK(sent_at >= reply.timestamp + latency_ms / 1000.0);
  CHECK(sent_at < reply.timestamp + latency_ms / 1000.0 + 0.2);
}

TEST_CASE("two clients see the same robot state stream") {
  Rig rig;
  Reader a(rig.server.port());
  Reader b(rig.server.port());
  rig.wait_clients(2);
  rig.run_until(3.0);
  rig.end_stream();
  const auto sa = a.states();
  const auto sb = b.states();
  CHECK(sa.size() >= 100);
  CHECK(sa == sb);
}

TEST_CASE("client start command drives the session into execution") {
  Rig rig;
  Reader a(rig.server.port());
  rig.wait_clients(1);
  rig.run_until(8.0);
  REQUIRE(rig.session.phase() == ProcedurePhase::Resting);
  a.send(encode_frame(CommandMsg{CommandKind::StartScan, {}}));
  CHECK(rig.step_while_waiting([&] { return rig.session.phase() == ProcedurePhase::Execution; }));
  rig.run_until(rig.t + 0.2);
  rig.end_stream();
  bool saw = false;
  for (const auto& s : a.states()) saw |= s.phase == ProcedurePhase::Execution;
  CHECK(saw);
}

TEST_CASE("garbage from one client leaves the rest untouched") {
  Rig rig;
  Reader good(rig.server.port());
  Reader bad(rig.server.port());
  rig.wait_clients(2);
  rig.run_until(1.0);
  bad.send({0xff, 0xff, 0xff, 0xff, 0x01, 0x02, 0x03});
  CHECK(rig.step_while_waiting([&] { return rig.server.client_count() == 1; }));
  rig.run_until(rig.t + 1.0);
  rig.end_stream();
  CHECK(good.states().size() >= 50);
  CHECK(rig.session.phase() == ProcedurePhase::Greeting);
}

TEST_CASE("binding an occupied port fails") {
  asio::io_context io;
  net::TcpServer first(io, net::parse_endpoint("127.0.0.1:0"), {});
  try {
    net::TcpServer second(io, net::parse_endpoint("127.0.0.1:" + std::to_string(first.port())), {});
    FAIL("double bind succeeded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BindError);
  }
}

TEST_CASE("websocket bridge relays state and accepts chat") {
  namespace beast = boost::beast;
  asio::io_context io;
  net::LiveSession session(SessionConfig::defaults());
  net::WsBridge bridge(io, net::parse_endpoint("127.0.0.1:0"), [&](const Message& m) {
    if (auto in = net::to_session_input(m)) session.submit(*in);
  });
  session.add_sink([&](const Message& m) { bridge.broadcast(m); });
  auto guard = asio::make_work_guard(io);
  std::thread io_thread([&] { io.run(); });

  asio::io_context cio;
  beast::websocket::stream<tcp::socket> ws(cio);
  ws.next_layer().connect({asio::ip::make_address("127.0.0.1"), bridge.port()});
  ws.handshake("127.0.0.1", "/");
  for (int i = 0; i < 500 && bridge.client_count() == 0; ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  REQUIRE(bridge.client_count() == 1);

  double t = 0.0;
  while (t < 8.0) session.step_to(t += 0.05);
  ws.write(asio::buffer(std::string(R"({"type":"chat","text":"please begin"})")));
  for (int i = 0; i < 1000 && session.phase() != ProcedurePhase::Execution; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    session.step_to(t += 0.002);
  }
  CHECK(session.phase() == ProcedurePhase::Execution);
  session.step_to(t += 0.05);

  bool saw_state = false, saw_execution = false;
  beast::flat_buffer buf;
  for (int i = 0; i < 5000 && !saw_execution; ++i) {
    ws.read(buf);
    const auto j = nlohmann::json::parse(beast::buffers_to_string(buf.data()));
    buf.consume(buf.size());
    if (j.at("type") == "state") {
      saw_state = true;
      saw_execution = j.at("phase") == "execution";
    }
  }
  CHECK(saw_state);
  CHECK(saw_execution);

  boost::system::error_code ec;
  ws.next_layer().close(ec);
  bridge.close();
  guard.reset();
  io.stop();
  io_thread.join();
}

}
