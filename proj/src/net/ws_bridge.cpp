#include "sono/net/ws_bridge.hpp"

#include <boost/beast/core.hpp>
#include <boost/beast/core/detail/base64.hpp>
#include <boost/beast/websocket.hpp>
#include <deque>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "sono/error.hpp"

namespace sono::net {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using asio::ip::tcp;

namespace {

constexpr std::size_t kMaxQueuedTexts = 4096;

std::string base64(const std::vector<std::uint8_t>& bytes) {
  std::string out(beast::detail::base64::encoded_size(bytes.size()), '\0');
  out.resize(beast::detail::base64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

}  // namespace

std::optional<std::string> bridge_text(const protocol::Message& m) {
  nlohmann::json j;
  if (const auto* r = std::get_if<protocol::RobotStateMsg>(&m)) {
    const Vec3& p = r->probe_pose.position;
    j = {{"type", "state"},
         {"t_s", r->t},
         {"phase", to_string(r->phase)},
         {"probe", {p.x, p.y, p.z}},
         {"force_n", r->contact_force}};
  } else if (const auto* a = std::get_if<protocol::AgentEventMsg>(&m)) {
    j = {{"type", "chat"}, {"speaker", to_string(a->utterance.speaker)}, {"text", a->utterance.text}};
  } else if (const auto* c = std::get_if<protocol::CommandMsg>(&m)) {
    if (c->cmd == protocol::CommandKind::SetPath) return std::nullopt;
    j = {{"type", "command"}, {"cmd", protocol::to_string(c->cmd)}};
  } else if (const auto* f = std::get_if<protocol::UltrasoundFrameMsg>(&m)) {
    j = {{"type", "frame"},    {"seq", f->seq},       {"t_ms", f->t_ms},
         {"width", f->width}, {"height", f->height}, {"pixels_b64", base64(f->pixels)}};
  } else {
    return std::nullopt;
  }
  return j.dump();
}

protocol::Message parse_bridge_text(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const auto type = j.at("type").get<std::string>();
    if (type == "command") {
      const auto kind = protocol::command_kind_from_string(j.at("cmd").get<std::string>());
      if (kind == protocol::CommandKind::SetPath) {
        fail(ErrorCode::MalformedPayload, "set_path is not accepted from the console");
      }
      return protocol::CommandMsg{kind, std::nullopt};
    }
    if (type == "chat") {
      Utterance u;
      u.speaker = j.contains("speaker") ? speaker_from_string(j.at("speaker").get<std::string>())
                                        : Speaker::Patient;
      u.text = j.at("text").get<std::string>();
      return protocol::AgentEventMsg{u};
    }
    fail(ErrorCode::MalformedPayload, "unsupported bridge message type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedPayload, std::string("bridge message: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedPayload) throw;
    fail(ErrorCode::MalformedPayload, e.what());
  }
}

class WsClient : public std::enable_shared_from_this<WsClient> {
 public:
  WsClient(tcp::socket socket, WsBridge& bridge) : ws_(std::move(socket)), bridge_(bridge) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    auto self = shared_from_this();
    ws_.async_accept([this, self](beast::error_code ec) {
      if (ec) return;
      bridge_.attach(self);
      read();
    });
  }

  void send(std::shared_ptr<const std::string> text) {
    if (closed_) return;
    if (queue_.size() >= kMaxQueuedTexts) {
      spdlog::warn("dropping slow console client");
      shutdown();
      return;
    }
    queue_.push_back(std::move(text));
    if (queue_.size() == 1) write();
  }

  void shutdown() {
    if (closed_) return;
    closed_ = true;
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
    beast::get_lowest_layer(ws_).socket().close(ec);
    bridge_.drop(shared_from_this());
  }

 private:
  void read() {
    auto self = shared_from_this();
    ws_.async_read(buffer_, [this, self](beast::error_code ec, std::size_t) {
      if (ec) {
        shutdown();
        return;
      }
      const std::string text = beast::buffers_to_string(buffer_.data());
      buffer_.consume(buffer_.size());
      try {
        const auto m = parse_bridge_text(text);
        if (bridge_.on_message_) bridge_.on_message_(m);
      } catch (const Error& e) {
        spdlog::warn("console message rejected: {}", e.what());
      }
      if (!closed_) read();
    });
  }

  void write() {
    auto self = shared_from_this();
    ws_.text(true);
    ws_.async_write(asio::buffer(*queue_.front()), [this, self](beast::error_code ec, std::size_t) {
      if (ec) {
        shutdown();
        return;
      }
      queue_.pop_front();
      if (!queue_.empty()) write();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  WsBridge& bridge_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  bool closed_ = false;
};

WsBridge::WsBridge(asio::io_context& io, const tcp::endpoint& endpoint, Handler on_message)
    : io_(io), acceptor_(io), on_message_(std::move(on_message)) {
  beast::error_code ec;
  acceptor_.open(endpoint.protocol(), ec);
  if (!ec) acceptor_.set_option(tcp::acceptor::reuse_address(true), ec);
  if (!ec) acceptor_.bind(endpoint, ec);
  if (!ec) acceptor_.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) {
    fail(ErrorCode::BindError, "cannot bind " + endpoint.address().to_string() + ":" +
                                   std::to_string(endpoint.port()) + ": " + ec.message());
  }
  port_ = acceptor_.local_endpoint().port();
  accept();
}

WsBridge::~WsBridge() {
  beast::error_code ec;
  acceptor_.close(ec);
}

void WsBridge::accept() {
  acceptor_.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec) return;
    std::make_shared<WsClient>(std::move(socket), *this)->start();
    accept();
  });
}

void WsBridge::attach(const std::shared_ptr<WsClient>& client) {
  std::lock_guard lock(mutex_);
  clients_.insert(client);
}

void WsBridge::drop(const std::shared_ptr<WsClient>& client) {
  std::lock_guard lock(mutex_);
  clients_.erase(client);
}

std::size_t WsBridge::client_count() const {
  std::lock_guard lock(mutex_);
  return clients_.size();
}

void WsBridge::broadcast(const protocol::Message& m) {
  auto text = bridge_text(m);
  if (!text) return;
  auto shared = std::make_shared<const std::string>(std::move(*text));
  asio::post(io_, [this, shared] {
    std::vector<std::shared_ptr<WsClient>> targets;
    {
      std::lock_guard lock(mutex_);
      targets.assign(clients_.begin(), clients_.end());
    }
    for (const auto& c : targets) c->send(shared);
  });
}

void WsBridge::close() {
  asio::post(io_, [this] {
    beast::error_code ec;
    acceptor_.close(ec);
    std::vector<std::shared_ptr<WsClient>> targets;
    {
      std::lock_guard lock(mutex_);
      targets.assign(clients_.begin(), clients_.end());
    }
    for (const auto& c : targets) c->shutdown();
  });
}

}  // namespace sono::net
