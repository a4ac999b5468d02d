#pragma once

#include <boost/asio.hpp>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "sono/protocol.hpp"

namespace sono::net {

// Console-facing JSON text frames:
//   {"type":"state","t_s":..,"phase":..,"probe":[x,y,z],"force_n":..}
//   {"type":"chat","speaker":..,"text":..}
//   {"type":"command","cmd":"start_scan"|"stop_scan"}
//   {"type":"frame","seq":..,"t_ms":..,"width":..,"height":..,"pixels_b64":..}
// Heartbeats are not relayed.
std::optional<std::string> bridge_text(const protocol::Message& m);

// Accepts "command" and "chat" frames from the console (chat speaker
// defaults to the patient). Throws MalformedPayload.
protocol::Message parse_bridge_text(std::string_view text);

class WsClient;

class WsBridge {
 public:
  using Handler = std::function<void(const protocol::Message&)>;

  // Throws BindError.
  WsBridge(boost::asio::io_context& io, const boost::asio::ip::tcp::endpoint& endpoint,
           Handler on_message);
  ~WsBridge();

  std::uint16_t port() const { return port_; }
  std::size_t client_count() const;

  // Thread-safe; messages without a bridge form are ignored.
  void broadcast(const protocol::Message& m);
  void close();

 private:
  friend class WsClient;
  void accept();
  void attach(const std::shared_ptr<WsClient>& client);
  void drop(const std::shared_ptr<WsClient>& client);

  boost::asio::io_context& io_;
  boost::asio::ip::tcp::acceptor acceptor_;
  Handler on_message_;
  std::uint16_t port_ = 0;
  mutable std::mutex mutex_;
  std::set<std::shared_ptr<WsClient>> clients_;
};

}  // namespace sono::net
